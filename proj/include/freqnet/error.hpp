#pragma once

#include <stdexcept>
#include <string>

namespace freqnet {

// Error taxonomy mirrors the CLI exit codes: configuration and contract
// violations exit 1, data/file problems exit 2, numeric failures exit 3.

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : ConfigError {
  using ConfigError::ConfigError;
};

struct ContractError : ConfigError {
  using ConfigError::ConfigError;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : DataError {
  using DataError::DataError;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : NumericError {
  using NumericError::NumericError;
};

}  // namespace freqnet
