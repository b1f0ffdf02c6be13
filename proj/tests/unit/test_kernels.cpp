// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstring>
#include <random>

#include <doctest.h>

#include "deco/kernels.hpp"

using namespace deco;

namespace {

std::vector<float> random_vec(std::mt19937_64& g, std::size_t n) {
  std::normal_distribution<float> d(0.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(g);
  return v;
}

bool same_bits(float a, float b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

const std::size_t kSizes[] = {0, 1, 3, 7, 8, 9, 15, 16, 17, 31, 64, 65, 100, 255, 256, 257, 1000};

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar kernels match a double-precision reference") {
    const auto& k = kernels::scalar_table();
    std::mt19937_64 g(1);
    for (std::size_t n : kSizes) {
      auto a = random_vec(g, n), b = random_vec(g, n);
      double ref = 0, mag = 0;
      for (std::size_t i = 0; i < n; ++i) {
        ref += static_cast<double>(a[i]) * b[i];
        mag += std::abs(static_cast<double>(a[i]) * b[i]);
      }
      CHECK(std::abs(k.dot(a.data(), b.data(), n) - ref) <= 1e-6 * (mag + 1));

      auto y = b;
      k.axpy(0.75f, a.data(), y.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == b[i] + 0.75f * a[i]);

      std::vector<float> out(n);
      k.scaled_add(a.data(), -1.5f, b.data(), out.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == a[i] + -1.5f * b[i]);

      if (n > 0) {
        float m = a[0];
        for (float x : a) m = std::max(m, x);
        CHECK(k.max(a.data(), n) == m);
      }
    }
  }

  TEST_CASE("scalar matvec matches row dots") {
    const auto& k = kernels::scalar_table();
    std::mt19937_64 g(2);
    for (std::size_t rows : {1u, 3u, 4u, 5u, 64u}) {
      for (std::size_t cols : {1u, 8u, 13u, 64u}) {
        auto w = random_vec(g, rows * cols), x = random_vec(g, cols);
        std::vector<float> y(rows);
        k.matvec(w.data(), rows, cols, x.data(), y.data());
        for (std::size_t r = 0; r < rows; ++r) CHECK(same_bits(y[r], k.dot(w.data() + r * cols, x.data(), cols)));
      }
    }
  }

  TEST_CASE("vector backend agrees bit for bit with scalar") {
    const kernels::KernelTable* v = kernels::avx2_table();
    if (v == nullptr) {
      MESSAGE("no vector backend on this machine");
      return;
    }
    const auto& s = kernels::scalar_table();
    std::mt19937_64 g(3);
    for (std::size_t n : kSizes) {
      auto a = random_vec(g, n), b = random_vec(g, n);
      CHECK(same_bits(s.dot(a.data(), b.data(), n), v->dot(a.data(), b.data(), n)));

      auto y1 = b, y2 = b;
      s.axpy(0.3f, a.data(), y1.data(), n);
      v->axpy(0.3f, a.data(), y2.data(), n);
      CHECK(same_bits(y1, y2));

      std::vector<float> o1(n), o2(n);
      s.scaled_add(a.data(), 0.6f, b.data(), o1.data(), n);
      v->scaled_add(a.data(), 0.6f, b.data(), o2.data(), n);
      CHECK(same_bits(o1, o2));

      if (n > 0) CHECK(same_bits(s.max(a.data(), n), v->max(a.data(), n)));
    }
    for (std::size_t rows : {1u, 2u, 3u, 4u, 5u, 7u, 64u, 256u}) {
      for (std::size_t cols : {1u, 7u, 8u, 9u, 64u, 256u}) {
        auto w = random_vec(g, rows * cols), x = random_vec(g, cols);
        std::vector<float> y1(rows), y2(rows);
        s.matvec(w.data(), rows, cols, x.data(), y1.data());
        v->matvec(w.data(), rows, cols, x.data(), y2.data());
        CHECK(same_bits(y1, y2));
      }
    }
  }

  TEST_CASE("backend can be forced") {
    const auto before = kernels::active().backend;
    kernels::set_backend(kernels::Backend::kScalar);
    CHECK(kernels::active().backend == kernels::Backend::kScalar);
    if (kernels::avx2_table() != nullptr) {
      kernels::set_backend(kernels::Backend::kAvx2);
      CHECK(kernels::active().backend == kernels::Backend::kAvx2);
    }
    kernels::set_backend(before);
  }
}
