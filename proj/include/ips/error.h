#ifndef IPS_ERROR_H_
#define IPS_ERROR_H_

#include <stdexcept>
#include <string>

namespace ips {

enum class ErrorKind {
  kDomain,        // argument outside the mathematical domain (d <= 0, ...)
  kShape,         // length / dimension mismatch
  kFormat,        // malformed file or row
  kOrdering,      // timestamps out of order within a stream
  kOptimization,  // optimizer could not evaluate any candidate
  kTraining,      // empty zone dataset, non-finite activations
  kNotFound,      // missing zone model, index out of range
  kInvalidConfig,
};

const char* ErrorKindName(ErrorKind kind);

// All library failures are reported through this exception type.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Format error that carries the 1-based line number of the offending input.
class LineError : public Error {
 public:
  LineError(std::size_t line, const std::string& message)
      : Error(ErrorKind::kFormat,
              "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace ips

#endif  // IPS_ERROR_H_
