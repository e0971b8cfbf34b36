#pragma once

#include <stdexcept>
#include <string>

namespace neardup {

// Data or runtime failure (bad input file, schema violation, service error).
// CLI maps this to exit code 1; usage errors are handled by the arg parser.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by the bigram distances when a string yields no bigram at all;
// callers must never see a silent 0 for such inputs.
class insufficient_bigrams : public error {
 public:
  explicit insufficient_bigrams(const std::string& what) : error(what) {}
};

}  // namespace neardup
