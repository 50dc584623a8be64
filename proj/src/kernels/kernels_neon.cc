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

// NEON kernels for aarch64, where Advanced SIMD is architecturally guaranteed.

#include <arm_neon.h>

#include "pmil/kernels.h"

namespace pmil::kernels::internal {

double DotNeon(const float* x, const double* w, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t xf = vld1q_f32(x + i);
    float64x2_t x0 = vcvt_f64_f32(vget_low_f32(xf));
    float64x2_t x1 = vcvt_high_f64_f32(xf);
    acc0 = vfmaq_f64(acc0, x0, vld1q_f64(w + i));
    acc1 = vfmaq_f64(acc1, x1, vld1q_f64(w + i + 2));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += static_cast<double>(x[i]) * w[i];
  return sum;
}

void AxpyNeon(double a, const float* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t xf = vld1q_f32(x + i);
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va,
                               vcvt_f64_f32(vget_low_f32(xf))));
    vst1q_f64(y + i + 2,
              vfmaq_f64(vld1q_f64(y + i + 2), va, vcvt_high_f64_f32(xf)));
  }
  for (; i < n; ++i) y[i] += a * static_cast<double>(x[i]);
}

void ScaleNeon(double a, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vmulq_n_f64(vld1q_f64(y + i), a));
  for (; i < n; ++i) y[i] *= a;
}

double SquaredNormNeon(const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vld1q_f64(y + i);
    acc = vfmaq_f64(acc, v, v);
  }
  double sum = vaddvq_f64(acc);
  for (; i < n; ++i) sum += y[i] * y[i];
  return sum;
}

}  // namespace pmil::kernels::internal
