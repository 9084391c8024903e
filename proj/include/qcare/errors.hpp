#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace qcare {

// Error taxonomy. Each class maps to a fixed CLI exit code:
//   io/config = 1, spectral precondition = 2, rank/conditioning = 3,
//   estimation precondition = 4.
class Error : public std::runtime_error {
 public:
  Error(std::string stage, std::string reason)
      : std::runtime_error(stage + ": " + reason),
        stage_(std::move(stage)),
        reason_(std::move(reason)) {}

  const std::string& stage() const noexcept { return stage_; }
  const std::string& reason() const noexcept { return reason_; }
  virtual int exit_code() const noexcept { return 1; }

 private:
  std::string stage_;
  std::string reason_;
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 1; }
};

// Imaginary-axis eigenvalues, missing spectral gap, RPA instability.
class SpectralError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

// Rank deficiency or a singular-value/conditioning requirement violated.
class RankError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

// Readout/estimation precondition violated (e.g. encoding error too large).
class EstimationError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

}  // namespace qcare
