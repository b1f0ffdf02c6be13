// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include "kernels_internal.hpp"

namespace deco::kernels::detail {

namespace {

float dot_scalar(const float* a, const float* b, std::size_t n) {
  float acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (int j = 0; j < 8; ++j) acc[j] = acc[j] + a[i + j] * b[i + j];
  }
  for (int j = 0; i + j < n; ++j) acc[j] = acc[j] + a[i + j] * b[i + j];
  return fold_lanes(acc);
}

void matvec_scalar(const float* w, std::size_t rows, std::size_t cols, const float* x, float* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(w + r * cols, x, cols);
}

void axpy_scalar(float alpha, const float* x, float* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scaled_add_scalar(const float* a, float alpha, const float* b, float* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + alpha * b[i];
}

float max_scalar(const float* x, std::size_t n) {
  float m = x[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, x[i]);
  return m;
}

}  // namespace

const KernelTable& scalar_impl() {
  static const KernelTable table{Backend::kScalar, "scalar", dot_scalar,       matvec_scalar,
                                 axpy_scalar,      scaled_add_scalar,         max_scalar};
  return table;
}

}  // namespace deco::kernels::detail
