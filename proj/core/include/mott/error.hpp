#pragma once

#include <stdexcept>
#include <string>

namespace mott {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Violated precondition or malformed input (bad law, gap below floor, ...).
class InvalidArgument : public Error {
public:
  using Error::Error;
};

// A solve or decomposition could not deliver the requested accuracy.
class NumericalError : public Error {
public:
  using Error::Error;
};

// A step or sample budget ran out before the stopping rule fired.
class BudgetExhausted : public Error {
public:
  using Error::Error;
};

// A finite environment window is too small for the requested operation.
// `required` is the smallest window radius that would have sufficed.
class WindowExceeded : public Error {
public:
  WindowExceeded(const std::string& what, long required)
      : Error(what), required_(required) {}
  long required() const noexcept { return required_; }

private:
  long required_;
};

} // namespace mott
