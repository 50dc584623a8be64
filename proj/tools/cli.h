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

#ifndef PMIL_TOOLS_CLI_H_
#define PMIL_TOOLS_CLI_H_

#include "pmil/error.h"

namespace pmil::cli {

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,      // bad flags or subcommand
  kExitInput = 2,      // invalid, inconsistent or corrupt input data
  kExitNumerical = 3,  // non-finite values during training or scoring
  kExitIo = 4,         // a file could not be read or written
  kExitInternal = 5,
};

int ExitCodeFor(ErrorKind kind);

// Entry point of the `pmil` tool; never throws.
int Run(int argc, const char* const* argv);

}  // namespace pmil::cli

#endif  // PMIL_TOOLS_CLI_H_
