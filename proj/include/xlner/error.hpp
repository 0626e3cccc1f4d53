#ifndef XLNER_ERROR_HPP_
#define XLNER_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace xlner {

// Error categories double as CLI exit codes.
enum class ErrorKind {
  kCheck = 1,    // a verification (grad check, comparison) failed
  kUsage = 2,    // bad flags, bad config, missing files
  kData = 3,     // malformed corpora, models, or inconsistent inputs
  kNumeric = 4,  // NaN/Inf or other numerical breakdown
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace xlner

#endif  // XLNER_ERROR_HPP_
