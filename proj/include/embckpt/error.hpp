// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace embckpt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid model, workload or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Mismatched lengths or matrix shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite input to a codec.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated serialized bytes.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A checkpoint chain references a missing or corrupt checkpoint.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// A second checkpoint was started while one is in flight.
class ConflictError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// I/O failure reported by an object store backend.
class StoreError : public Error {
 public:
  using Error::Error;
};

}  // namespace embckpt
