#ifndef D2DTO_ERRORS_HPP_
#define D2DTO_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <vector>

namespace d2dto {

// Invalid user-supplied configuration or data. The message lists every
// offending field, one clause per field.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::vector<std::string>& problems)
      : std::runtime_error(join(problems)), problems_(problems) {}

  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& problems) {
    std::string msg = "validation failed:";
    for (const auto& p : problems) {
      msg += "\n  - " + p;
    }
    return msg;
  }

  std::vector<std::string> problems_;
};

// Malformed instance/solution file. Carries whatever line/field context the
// parser could recover.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Problem instance exceeds a solver's hard size guard.
class SizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace d2dto

#endif  // D2DTO_ERRORS_HPP_
