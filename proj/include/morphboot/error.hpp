// Copyright 2026 The morphboot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MORPHBOOT_ERROR_HPP_
#define MORPHBOOT_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace morphboot {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration: mismatched symbol tables, unknown symbols, bad ratios.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A grammar file or grammar spec violates its invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A string could not be segmented into graphemes.
class SegmentationError : public Error {
 public:
  SegmentationError(const std::string& input, std::size_t position)
      : Error("cannot segment '" + input + "' at position " +
              std::to_string(position)),
        position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Random generation failed to find an accepting path.
class GenerationError : public Error {
 public:
  using Error::Error;
};

// The operation does not support the transducer's structure (e.g. cycles).
class UnsupportedStructureError : public Error {
 public:
  using Error::Error;
};

// Malformed analysis token sequence or training pair.
class TokenizationError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, vocab overflow, empty data during training.
class TrainingError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage failed; carries the stage name alongside the cause.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace morphboot

#endif  // MORPHBOOT_ERROR_HPP_
