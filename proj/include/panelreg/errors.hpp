#pragma once

#include <stdexcept>
#include <string>

namespace panelreg {

// Malformed input file; carries the 1-based line number of the offender.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Structurally valid input carrying inadmissible values: non-finite numbers,
// duplicate keys, out-of-range parameters.
class ValidationError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Dataset cannot support the requested construction, e.g. every sensitivity
// score is zero.
class DegenerateDataError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace panelreg
