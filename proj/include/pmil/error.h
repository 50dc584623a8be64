// Copyright 2026 The PMIL Authors. All Rights Reserved.
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

#ifndef PMIL_ERROR_H_
#define PMIL_ERROR_H_

#include <stdexcept>
#include <string>

namespace pmil {

// Broad failure categories. The CLI maps these onto distinct exit codes.
enum class ErrorKind {
  kInvalidArgument,    // caller passed values outside a documented range
  kDimensionMismatch,  // feature dimensions disagree
  kInvalidData,        // dataset content violates a type invariant
  kCorruptFile,        // truncated, malformed or checksum-failing file
  kVersionMismatch,    // file written by an unsupported format version
  kIo,                 // file could not be opened, read or written
  kNumerical,          // non-finite value during optimization or scoring
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pmil

#endif  // PMIL_ERROR_H_
