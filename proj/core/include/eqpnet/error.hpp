// Copyright 2026 The eqpnet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EQPNET_ERROR_HPP
#define EQPNET_ERROR_HPP

#include <stdexcept>
#include <string>

namespace eqpnet {

// Base of every error thrown by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by the caller (bad dimension, out-of-range parameter).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// An iterative method failed to produce a usable answer.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class SolverFailure : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class EmptyDictionary : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed text input; the message carries the offending line number.
class ParseError : public IoError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : IoError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace eqpnet

#endif  // EQPNET_ERROR_HPP
