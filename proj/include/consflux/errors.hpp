#pragma once

#include <stdexcept>
#include <string>

namespace consflux {

// Error taxonomy shared by the library, the C API and the CLI exit codes:
// validation = 1, numeric = 2, io = 3.
enum class ErrorKind { Validation = 1, Numeric = 2, Io = 3 };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string msg)
      : std::runtime_error(std::move(msg)), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

struct ValidationError : Error {
  explicit ValidationError(std::string msg)
      : Error(ErrorKind::Validation, std::move(msg)) {}
};

struct NumericError : Error {
  explicit NumericError(std::string msg)
      : Error(ErrorKind::Numeric, std::move(msg)) {}
};

// Raised when a time march produces non-finite state; carries the failure time.
struct BlowUpError : NumericError {
  BlowUpError(std::string msg, double time, long step)
      : NumericError(std::move(msg)), failure_time(time), failure_step(step) {}
  double failure_time;
  long failure_step;
};

struct IoError : Error {
  explicit IoError(std::string msg) : Error(ErrorKind::Io, std::move(msg)) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace consflux
