#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmcmc {

/// Root of the engine's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called with arguments outside its contract.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A byte sequence could not be decoded (truncated, wrong version, bad tag).
class DeserializationError : public Error {
 public:
  using Error::Error;
};

/// Every particle weight is zero (or some weight is not finite).
class DegenerateEnsembleError : public Error {
 public:
  using Error::Error;
};

/// Configuration or data-file validation failure. `location` names the
/// offending field (JSON pointer) or `file:line`.
class ConfigError : public Error {
 public:
  ConfigError(std::string location, const std::string& message)
      : Error(location + ": " + message), location_(std::move(location)), message_(message) {}

  [[nodiscard]] const std::string& location() const noexcept { return location_; }
  [[nodiscard]] const std::string& message() const noexcept { return message_; }

 private:
  std::string location_;
  std::string message_;
};

/// Master-worker protocol failure: a worker raised, a message timed out, or
/// a routing could not be honoured.
class ProtocolError : public Error {
 public:
  ProtocolError(int rank, std::string step, const std::string& message)
      : Error("rank " + std::to_string(rank) + " at step '" + step + "': " + message),
        rank_(rank),
        step_(std::move(step)) {}

  [[nodiscard]] int rank() const noexcept { return rank_; }
  [[nodiscard]] const std::string& step() const noexcept { return step_; }

 private:
  int rank_;
  std::string step_;
};

/// A likelihood evaluation failed inside the MCMC loop.
class SamplerError : public Error {
 public:
  SamplerError(std::size_t sample_index, const std::string& message)
      : Error("sample " + std::to_string(sample_index) + ": " + message),
        sample_index_(sample_index) {}

  [[nodiscard]] std::size_t sample_index() const noexcept { return sample_index_; }

 private:
  std::size_t sample_index_;
};

}  // namespace pmcmc
