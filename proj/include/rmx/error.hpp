#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rmx {

// Broad error classes; each maps to one CLI exit code.
enum class ErrorKind : std::uint8_t {
  kValidation,  // bad shapes, configs, topologies, malformed input data
  kDivergence,  // non-finite or exploding numbers during training/generation
  kIo,          // file system, checkpoint integrity, wire protocol
};

int exit_code_for(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::kValidation, what) {}
};

class ShapeError : public ValidationError {
 public:
  explicit ShapeError(const std::string& what)
      : ValidationError("shape error: " + what) {}
};

class TopologyMismatch : public ValidationError {
 public:
  explicit TopologyMismatch(const std::string& what)
      : ValidationError("topology mismatch: " + what) {}
};

class ConfigError : public ValidationError {
 public:
  explicit ConfigError(const std::string& what)
      : ValidationError("config error: " + what) {}
};

class DivergenceError : public Error {
 public:
  // `index` is a batch index during training and a frame index during
  // generation; the message says which.
  DivergenceError(const std::string& what, std::int64_t index)
      : Error(ErrorKind::kDivergence, what), index_(index) {}
  std::int64_t index() const { return index_; }

 private:
  std::int64_t index_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

class CheckpointError : public IoError {
 public:
  explicit CheckpointError(const std::string& what)
      : IoError("checkpoint: " + what) {}
};

}  // namespace rmx
