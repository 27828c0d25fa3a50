//
// Copyright 2026 The memlab Authors
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
//

#ifndef MEMLAB_ERRORS_HPP_
#define MEMLAB_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace memlab {

enum class ErrorKind {
  kInput,
  kNumeric,
  kUsage,
  kFormat,
  kTraining,
  kCoverage,
  kConflict,
  kConfig,
  kFile,
};

const char* ErrorKindName(ErrorKind kind);

// Base of every error the library throws. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

#define MEMLAB_DEFINE_ERROR(Name, Kind)                                 \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& message) : Error(Kind, message) {} \
  }

MEMLAB_DEFINE_ERROR(InputError, ErrorKind::kInput);
MEMLAB_DEFINE_ERROR(NumericError, ErrorKind::kNumeric);
MEMLAB_DEFINE_ERROR(UsageError, ErrorKind::kUsage);
MEMLAB_DEFINE_ERROR(FormatError, ErrorKind::kFormat);
MEMLAB_DEFINE_ERROR(TrainingError, ErrorKind::kTraining);
MEMLAB_DEFINE_ERROR(CoverageError, ErrorKind::kCoverage);
MEMLAB_DEFINE_ERROR(ConflictError, ErrorKind::kConflict);
MEMLAB_DEFINE_ERROR(ConfigError, ErrorKind::kConfig);
MEMLAB_DEFINE_ERROR(FileError, ErrorKind::kFile);

#undef MEMLAB_DEFINE_ERROR

}  // namespace memlab

#endif  // MEMLAB_ERRORS_HPP_
