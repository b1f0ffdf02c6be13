// SPDX-License-Identifier: Apache-2.0
#include <immintrin.h>

#include <algorithm>

#include "kernels_internal.hpp"

namespace deco::kernels::detail {

namespace {

float dot_avx2(const float* a, const float* b, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc = _mm256_add_ps(acc, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  }
  alignas(32) float lanes[8];
  _mm256_store_ps(lanes, acc);
  for (int j = 0; i + j < n; ++j) lanes[j] = lanes[j] + a[i + j] * b[i + j];
  return fold_lanes(lanes);
}

void matvec_avx2(const float* w, std::size_t rows, std::size_t cols, const float* x, float* y) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const float* w0 = w + (r + 0) * cols;
    const float* w1 = w + (r + 1) * cols;
    const float* w2 = w + (r + 2) * cols;
    const float* w3 = w + (r + 3) * cols;
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    __m256 acc2 = _mm256_setzero_ps();
    __m256 acc3 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= cols; i += 8) {
      const __m256 xv = _mm256_loadu_ps(x + i);
      acc0 = _mm256_add_ps(acc0, _mm256_mul_ps(_mm256_loadu_ps(w0 + i), xv));
      acc1 = _mm256_add_ps(acc1, _mm256_mul_ps(_mm256_loadu_ps(w1 + i), xv));
      acc2 = _mm256_add_ps(acc2, _mm256_mul_ps(_mm256_loadu_ps(w2 + i), xv));
      acc3 = _mm256_add_ps(acc3, _mm256_mul_ps(_mm256_loadu_ps(w3 + i), xv));
    }
    alignas(32) float lanes[4][8];
    _mm256_store_ps(lanes[0], acc0);
    _mm256_store_ps(lanes[1], acc1);
    _mm256_store_ps(lanes[2], acc2);
    _mm256_store_ps(lanes[3], acc3);
    const float* rows4[4] = {w0, w1, w2, w3};
    for (int k = 0; k < 4; ++k) {
      for (int j = 0; i + j < cols; ++j) lanes[k][j] = lanes[k][j] + rows4[k][i + j] * x[i + j];
      y[r + k] = fold_lanes(lanes[k]);
    }
  }
  for (; r < rows; ++r) y[r] = dot_avx2(w + r * cols, x, cols);
}

void axpy_avx2(float alpha, const float* x, float* y, std::size_t n) {
  const __m256 av = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 yv = _mm256_loadu_ps(y + i);
    _mm256_storeu_ps(y + i, _mm256_add_ps(yv, _mm256_mul_ps(av, _mm256_loadu_ps(x + i))));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scaled_add_avx2(const float* a, float alpha, const float* b, float* out, std::size_t n) {
  const __m256 av = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 sum = _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_mul_ps(av, _mm256_loadu_ps(b + i)));
    _mm256_storeu_ps(out + i, sum);
  }
  for (; i < n; ++i) out[i] = a[i] + alpha * b[i];
}

float max_avx2(const float* x, std::size_t n) {
  if (n < 8) return *std::max_element(x, x + n);
  __m256 m = _mm256_loadu_ps(x);
  std::size_t i = 8;
  for (; i + 8 <= n; i += 8) m = _mm256_max_ps(m, _mm256_loadu_ps(x + i));
  alignas(32) float lanes[8];
  _mm256_store_ps(lanes, m);
  float best = *std::max_element(lanes, lanes + 8);
  for (; i < n; ++i) best = std::max(best, x[i]);
  return best;
}

}  // namespace

const KernelTable& avx2_impl() {
  static const KernelTable table{Backend::kAvx2, "avx2", dot_avx2,        matvec_avx2,
                                 axpy_avx2,      scaled_add_avx2,         max_avx2};
  return table;
}

}  // namespace deco::kernels::detail
