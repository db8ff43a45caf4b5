// Copyright 2026 The pcssl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace pcssl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file content (wrong record length, bad header, bad magic).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Well-formed container holding invalid values (NaN/Inf, out-of-range ids).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A precondition on function arguments was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A filter removed every input element.
class EmptyResultError : public Error {
 public:
  using Error::Error;
};

/// Incompatible tensor shapes while building a computation graph.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Forward evaluation produced a non-finite value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Projection output collapsed to (near) zero norm.
class DegenerateEmbeddingError : public Error {
 public:
  using Error::Error;
};

/// Synthetic scene could not be generated under the given constraints.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// An internal consistency check failed. Indicates a bug, not bad input.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace pcssl
