// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

namespace deco::kernels {

// Float32 inner loops used by the toy model and the logit correction.
//
// Every backend accumulates reductions in eight interleaved lanes (element i
// goes to lane i % 8) and folds the lanes in one fixed order, and uses no
// fused multiply-add. The scalar reference and the vector variants therefore
// agree bit for bit, which keeps recorded traces independent of the CPU.

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
  Backend backend;
  const char* name;
  float (*dot)(const float* a, const float* b, std::size_t n);
  // y[r] = dot(w[r * cols ...], x) for r in [0, rows)
  void (*matvec)(const float* w, std::size_t rows, std::size_t cols, const float* x, float* y);
  // y += alpha * x
  void (*axpy)(float alpha, const float* x, float* y, std::size_t n);
  // out = a + alpha * b
  void (*scaled_add)(const float* a, float alpha, const float* b, float* out, std::size_t n);
  float (*max)(const float* x, std::size_t n);
};

const KernelTable& scalar_table();

/// nullptr when the binary was built without the variant or the CPU lacks it.
const KernelTable* avx2_table();

/// Table selected at first use: DECO_KERNELS=scalar|avx2 if set, otherwise the
/// widest backend the CPU supports.
const KernelTable& active();

/// Overrides the active backend. Throws InvalidInput if it is unavailable.
void set_backend(Backend backend);

/// Folds eight lane accumulators in the order shared by all backends.
inline float fold_lanes(const float* acc) {
  const float s0 = acc[0] + acc[4];
  const float s1 = acc[1] + acc[5];
  const float s2 = acc[2] + acc[6];
  const float s3 = acc[3] + acc[7];
  return (s0 + s2) + (s1 + s3);
}

inline float dot(std::span<const float> a, std::span<const float> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void matvec(std::span<const float> w, std::size_t rows, std::span<const float> x,
                   std::span<float> y) {
  active().matvec(w.data(), rows, x.size(), x.data(), y.data());
}

inline void axpy(float alpha, std::span<const float> x, std::span<float> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace deco::kernels
