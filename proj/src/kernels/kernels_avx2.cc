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

// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after a runtime CPU check.

#include <immintrin.h>

#include "pmil/kernels.h"

namespace pmil::kernels::internal {

namespace {

inline double HorizontalSum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d swapped = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

}  // namespace

double DotAvx2(const float* x, const double* w, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 xf = _mm256_loadu_ps(x + i);
    __m256d x0 = _mm256_cvtps_pd(_mm256_castps256_ps128(xf));
    __m256d x1 = _mm256_cvtps_pd(_mm256_extractf128_ps(xf, 1));
    acc0 = _mm256_fmadd_pd(x0, _mm256_loadu_pd(w + i), acc0);
    acc1 = _mm256_fmadd_pd(x1, _mm256_loadu_pd(w + i + 4), acc1);
  }
  double sum = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += static_cast<double>(x[i]) * w[i];
  return sum;
}

void AxpyAvx2(double a, const float* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 xf = _mm256_loadu_ps(x + i);
    __m256d x0 = _mm256_cvtps_pd(_mm256_castps256_ps128(xf));
    __m256d x1 = _mm256_cvtps_pd(_mm256_extractf128_ps(xf, 1));
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, x0, _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4,
                     _mm256_fmadd_pd(va, x1, _mm256_loadu_pd(y + i + 4)));
  }
  for (; i < n; ++i) y[i] += a * static_cast<double>(x[i]);
}

void ScaleAvx2(double a, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] *= a;
}

double SquaredNormAvx2(const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d v0 = _mm256_loadu_pd(y + i);
    __m256d v1 = _mm256_loadu_pd(y + i + 4);
    acc0 = _mm256_fmadd_pd(v0, v0, acc0);
    acc1 = _mm256_fmadd_pd(v1, v1, acc1);
  }
  double sum = HorizontalSum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += y[i] * y[i];
  return sum;
}

}  // namespace pmil::kernels::internal
