#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mott::cli {

// Exit statuses of the `mott` tool.
enum Exit : int {
  kOk = 0,
  kFailure = 1,
  kSchema = 2,
  kNumerical = 3,
  kBudget = 4,
};

// Runs the tool on argv-style arguments (args[0] is the program name).
// Human-readable progress goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// 64-bit FNV-1a as 16 hex digits (config and artifact hashes).
std::string fnv_hex(const std::string& bytes);

} // namespace mott::cli
