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

#ifndef PMIL_KERNELS_H_
#define PMIL_KERNELS_H_

#include <cstddef>
#include <string_view>

namespace pmil::kernels {

// Instruction sets with a dedicated kernel implementation.
enum class Isa { kScalar, kAvx2, kNeon };

std::string_view IsaName(Isa isa);

// Dense inner loops used by training and prediction. Features are stored as
// float (the payload format), model weights and accumulators as double.
struct KernelTable {
  Isa isa;
  // sum_i x[i] * w[i]
  double (*dot)(const float* x, const double* w, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double a, const float* x, double* y, std::size_t n);
  // y[i] *= a
  void (*scale)(double a, double* y, std::size_t n);
  // sum_i y[i]^2
  double (*squared_norm)(const double* y, std::size_t n);
};

// True when the running CPU can execute the kernels for `isa` and they were
// compiled into this binary.
bool IsaAvailable(Isa isa);

// Kernel table for a specific ISA. Throws pmil::Error if unavailable.
const KernelTable& KernelsFor(Isa isa);

// Kernel table picked once per process: the widest available ISA, unless the
// PMIL_SIMD environment variable names another one ("scalar", "avx2",
// "neon").
const KernelTable& ActiveKernels();

namespace internal {
// Reference implementations, always compiled.
double DotScalar(const float* x, const double* w, std::size_t n);
void AxpyScalar(double a, const float* x, double* y, std::size_t n);
void ScaleScalar(double a, double* y, std::size_t n);
double SquaredNormScalar(const double* y, std::size_t n);

#if defined(PMIL_HAVE_AVX2)
double DotAvx2(const float* x, const double* w, std::size_t n);
void AxpyAvx2(double a, const float* x, double* y, std::size_t n);
void ScaleAvx2(double a, double* y, std::size_t n);
double SquaredNormAvx2(const double* y, std::size_t n);
#endif

#if defined(PMIL_HAVE_NEON)
double DotNeon(const float* x, const double* w, std::size_t n);
void AxpyNeon(double a, const float* x, double* y, std::size_t n);
void ScaleNeon(double a, double* y, std::size_t n);
double SquaredNormNeon(const double* y, std::size_t n);
#endif
}  // namespace internal

}  // namespace pmil::kernels

#endif  // PMIL_KERNELS_H_
