#pragma once

#include <stdexcept>
#include <string>

namespace dtp {

// Tensor shape or dimension violations. Messages name the offending dimension.
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Invalid model / training / dataset configuration.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

enum class IoErrorKind {
  OpenFailed,
  BadMagic,
  BadVersion,
  Truncated,
  BadValue,
  WriteFailed,
};

// File format and I/O failures; kind() distinguishes magic/version/truncation.
class IoError : public std::runtime_error {
 public:
  IoError(IoErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  IoErrorKind kind() const noexcept { return kind_; }

 private:
  IoErrorKind kind_;
};

// Training produced non-finite values.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Metric or numerical precondition violated (zero variance, rank deficiency, ...).
class MetricDomainError : public std::runtime_error {
 public:
  explicit MetricDomainError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dtp
