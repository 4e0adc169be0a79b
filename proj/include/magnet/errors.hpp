// Copyright 2026 The magnet-kit Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace magnet {

// Base class for every error raised by the library. The CLI maps subclasses
// onto its exit-code contract.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not compose.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf where finite values are required, or a diverging training run.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Invalid hyperparameters or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (files, masks, labels).
class DataError : public Error {
 public:
  using Error::Error;
};

// A patient whose modality mask row is all zeros.
class InvalidPatientError : public DataError {
 public:
  using DataError::DataError;
};

// API misuse that is not a data problem, e.g. backward from a non-scalar.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Metric is undefined for the given input (single class, empty input).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace magnet
