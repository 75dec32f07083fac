#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace lrsched {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownImage : public Error {
 public:
  explicit UnknownImage(const std::string& image)
      : Error("unknown image: " + image), image_(image) {}
  const std::string& image() const noexcept { return image_; }

 private:
  std::string image_;
};

/// A placement would break one of the node constraints (storage,
/// container_count, cpu_fit, mem_fit).
class CapacityViolation : public Error {
 public:
  explicit CapacityViolation(std::string constraint)
      : Error("capacity violation: " + constraint), constraint_(std::move(constraint)) {}
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

class InvalidModel : public Error {
 public:
  using Error::Error;
};

// Registry errors. RegistryUnavailable is the only retryable one.
class RegistryUnavailable : public Error {
 public:
  using Error::Error;
};

class RegistryProtocolError : public Error {
 public:
  RegistryProtocolError(int status, const std::string& what)
      : Error(what + " (HTTP " + std::to_string(status) + ")"), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class UnsupportedManifest : public Error {
 public:
  using Error::Error;
};

class CacheCorrupt : public Error {
 public:
  using Error::Error;
};

class DigestSizeConflict : public Error {
 public:
  using Error::Error;
};

class TraceCorrupt : public Error {
 public:
  TraceCorrupt(std::size_t line, const std::string& what)
      : Error("trace line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid scenario; `field()` is a dotted path such as `nodes[2].storage`.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ComparisonError : public Error {
 public:
  using Error::Error;
};

}  // namespace lrsched
