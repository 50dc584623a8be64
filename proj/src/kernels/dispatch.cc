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

#include <cstdlib>
#include <string>

#include "pmil/error.h"
#include "pmil/kernels.h"

namespace pmil::kernels {

namespace {

const KernelTable kScalarTable = {Isa::kScalar, internal::DotScalar,
                                  internal::AxpyScalar, internal::ScaleScalar,
                                  internal::SquaredNormScalar};

#if defined(PMIL_HAVE_AVX2)
const KernelTable kAvx2Table = {Isa::kAvx2, internal::DotAvx2,
                                internal::AxpyAvx2, internal::ScaleAvx2,
                                internal::SquaredNormAvx2};
#endif

#if defined(PMIL_HAVE_NEON)
const KernelTable kNeonTable = {Isa::kNeon, internal::DotNeon,
                                internal::AxpyNeon, internal::ScaleNeon,
                                internal::SquaredNormNeon};
#endif

const KernelTable& SelectKernels() {
  if (const char* forced = std::getenv("PMIL_SIMD")) {
    const std::string name(forced);
    for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
      if (name == IsaName(isa) && IsaAvailable(isa)) return KernelsFor(isa);
    }
  }
  for (Isa isa : {Isa::kAvx2, Isa::kNeon}) {
    if (IsaAvailable(isa)) return KernelsFor(isa);
  }
  return kScalarTable;
}

}  // namespace

std::string_view IsaName(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

bool IsaAvailable(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(PMIL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(PMIL_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& KernelsFor(Isa isa) {
  if (!IsaAvailable(isa)) {
    throw Error(ErrorKind::kInvalidArgument,
                "SIMD kernels unavailable on this machine: " +
                    std::string(IsaName(isa)));
  }
  switch (isa) {
#if defined(PMIL_HAVE_AVX2)
    case Isa::kAvx2:
      return kAvx2Table;
#endif
#if defined(PMIL_HAVE_NEON)
    case Isa::kNeon:
      return kNeonTable;
#endif
    default:
      return kScalarTable;
  }
}

const KernelTable& ActiveKernels() {
  static const KernelTable& table = SelectKernels();
  return table;
}

}  // namespace pmil::kernels
