/* Copyright (c) 2026 The sdconv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sdconv {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition on an argument (shape mismatch, even dilation, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Operation asked for a filter kind it cannot handle (e.g. separable smoothing
// of a learned kernel).
class UnsupportedKindError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::int64_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

// Thrown by the gridding tracer when no interior pixel exists.
class ExtentTooSmallError : public ParameterError {
 public:
  ExtentTooSmallError(const std::string& what, int min_extent)
      : ParameterError(what), min_extent_(min_extent) {}

  int min_extent() const noexcept { return min_extent_; }

 private:
  int min_extent_;
};

}  // namespace sdconv
