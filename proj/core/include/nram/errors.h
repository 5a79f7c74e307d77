// Copyright 2026 The NRAM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NRAM_ERRORS_H_
#define NRAM_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nram {

// Root of every exception thrown by the library. Subclasses exist so callers
// (and the CLI's exit-code mapping) can tell failure kinds apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DegenerateMaskError : public Error {
 public:
  using Error::Error;
};

class NumericInstabilityError : public Error {
 public:
  NumericInstabilityError(const std::string& what, std::size_t parameter_index)
      : Error(what), parameter_index_(parameter_index) {}
  std::size_t parameter_index() const { return parameter_index_; }

 private:
  std::size_t parameter_index_;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class OutOfVocabularyError : public Error {
 public:
  using Error::Error;
};

class DegenerateTitleError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DuplicateIdError : public ParseError {
 public:
  using ParseError::ParseError;
};

class FormatError : public ParseError {
 public:
  using ParseError::ParseError;
};

class EmptyReportError : public Error {
 public:
  using Error::Error;
};

class DivergedTrainingError : public Error {
 public:
  DivergedTrainingError(const std::string& what, int epoch, std::size_t batch)
      : Error(what), epoch_(epoch), batch_(batch) {}
  int epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  int epoch_;
  std::size_t batch_;
};

class UnknownNewsIdError : public Error {
 public:
  using Error::Error;
};

class VocabularyMismatchError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class BadMagicError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class VersionMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class ChecksumError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

}  // namespace nram

#endif  // NRAM_ERRORS_H_
