#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace grainpd {

/// Root of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid shape parameters (e.g. neck half-width not below the radius).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// The triangulator could not mesh a polygon, or an imported mesh is malformed.
class MeshError : public Error {
 public:
  using Error::Error;
};

/// Invalid material parameters or a bad peridynamic configuration
/// (horizon too small for the discretization).
class MaterialError : public Error {
 public:
  using Error::Error;
};

/// Two bonded nodes occupy the same current position.
class SingularBondError : public Error {
 public:
  using Error::Error;
};

/// Two contacting nodes or two body centroids coincide.
class SingularContactError : public Error {
 public:
  using Error::Error;
};

/// Configuration parsing or validation failure. `key()` is the dotted key path.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}

  [[nodiscard]] const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Non-finite state encountered during time stepping.
class InstabilityError : public Error {
 public:
  InstabilityError(std::int64_t step, const std::string& message)
      : Error("step " + std::to_string(step) + ": " + message), step_(step) {}

  [[nodiscard]] std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

/// File could not be read or written, or has an unexpected layout.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace grainpd
