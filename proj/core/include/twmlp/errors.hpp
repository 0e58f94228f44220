#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twmlp {

/// Base class for all errors raised by the engine.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor/matrix dimensions do not match the operation contract.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

/// Non-finite or otherwise malformed numeric input.
class InvalidInputError : public Error {
 public:
  explicit InvalidInputError(const std::string& msg) : Error(msg) {}
};

/// An operation produced NaN/Inf values.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

/// A 6D rotation could not be orthonormalized (near-zero or parallel rows).
class DegenerateRotationError : public Error {
 public:
  explicit DegenerateRotationError(const std::string& msg) : Error(msg) {}
};

/// Frame timestamps out of order or non-consecutive.
class SequencingError : public Error {
 public:
  explicit SequencingError(const std::string& msg) : Error(msg) {}
};

/// Not enough stream history to assemble the requested windows.
class HistoryError : public Error {
 public:
  explicit HistoryError(const std::string& msg) : Error(msg) {}
};

/// Malformed file content. Binary parse failures carry the byte offset;
/// text/IO failures use the message-only form (offset() reports npos).
class FormatError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit FormatError(const std::string& msg) : Error(msg), offset_(npos) {}
  FormatError(const std::string& msg, std::size_t offset)
      : Error(msg + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Invalid configuration values.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// A call violated an API precondition.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& msg) : Error(msg) {}
};

/// Training produced non-finite losses or gradients; message carries the step.
class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(long step, const std::string& msg)
      : Error("training diverged at step " + std::to_string(step) + ": " + msg), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace twmlp
