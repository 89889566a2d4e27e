// Copyright (c) 2026, The promptlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace promptlab {

// Root of every error thrown by the library. The CLI maps the subclasses
// onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or argument value (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Tensor extents that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf detected at a checked boundary, or a numerically degenerate
// input (exit code 3).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed file or record (exit code 4).
class FormatError : public Error {
 public:
  using Error::Error;
};

// A required upstream artifact is missing.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

}  // namespace promptlab
