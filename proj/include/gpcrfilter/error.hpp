#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gpcrfilter {

// Bad user input: malformed files, unparseable text, inconsistent arguments.
// The CLI maps this to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Text parse failure with the byte offset (or line number) where it happened.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t position, const char* unit = "offset")
      : InputError(what + " at " + unit + " " + std::to_string(position)),
        position_(position),
        reason_(what) {}

  std::size_t position() const noexcept { return position_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t position_;
  std::string reason_;
};

// A broken internal invariant. The CLI maps this to exit code 2.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

#define GPCRFILTER_ENSURE(cond, msg)                                       \
  do {                                                                     \
    if (!(cond)) throw ::gpcrfilter::InvariantError(std::string(msg));     \
  } while (0)

}  // namespace gpcrfilter
