#pragma once

#include <algorithm>
#include <initializer_list>
#include <vector>

#include "mott/env.hpp"

namespace mott {

// Closed integer interval [lo, hi]; +-kUnboundedIndex stand for +-infinity.
struct IndexInterval {
  long lo = 0;
  long hi = 0;

  bool contains(long k) const { return k >= lo && k <= hi; }
  bool empty() const { return lo > hi; }
};

// Finite union of intervals of Z, e.g. (-inf, 0] u [rho, inf).
class IndexSet {
public:
  IndexSet() = default;
  IndexSet(std::initializer_list<IndexInterval> parts) : parts_(parts) {}

  static IndexSet point(long k) { return {{k, k}}; }
  static IndexSet range(long lo, long hi) { return {{lo, hi}}; }
  static IndexSet at_most(long k) { return {{-kUnboundedIndex, k}}; }
  static IndexSet at_least(long k) { return {{k, kUnboundedIndex}}; }

  IndexSet unite(const IndexSet& other) const {
    IndexSet out = *this;
    out.parts_.insert(out.parts_.end(), other.parts_.begin(), other.parts_.end());
    return out;
  }

  bool contains(long k) const {
    return std::any_of(parts_.begin(), parts_.end(), [k](const IndexInterval& p) { return p.contains(k); });
  }
  bool empty() const {
    return std::all_of(parts_.begin(), parts_.end(), [](const IndexInterval& p) { return p.empty(); });
  }
  bool disjoint(const IndexSet& other) const {
    for (const auto& a : parts_)
      for (const auto& b : other.parts_)
        if (std::max(a.lo, b.lo) <= std::min(a.hi, b.hi)) return false;
    return true;
  }
  const std::vector<IndexInterval>& parts() const { return parts_; }

private:
  std::vector<IndexInterval> parts_;
};

} // namespace mott
