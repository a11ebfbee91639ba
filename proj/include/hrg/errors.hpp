#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace hrg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested averaging level exceeds the volume scale.
class LevelOutOfRange : public Error {
 public:
  using Error::Error;
};

// Malformed numeric input (non-finite entries, size mismatch, bad parameters).
class InputError : public Error {
 public:
  using Error::Error;
};

// Dense materialization above the configured cap.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// Not enough data for a statistical estimate.
class StatisticsError : public Error {
 public:
  using Error::Error;
};

// Singular or numerically non-invertible system. Carries the realization
// seed when one is known so the failure can be reproduced.
class SingularError : public Error {
 public:
  explicit SingularError(const std::string& what, std::optional<std::uint64_t> seed = std::nullopt)
      : Error(seed ? what + " (seed " + std::to_string(*seed) + ")" : what), seed_(seed) {}

  std::optional<std::uint64_t> seed() const { return seed_; }

 private:
  std::optional<std::uint64_t> seed_;
};

// Schema violation in an experiment configuration. `path` is a JSON pointer.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace hrg
