// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cstdlib>
#include <string_view>

#include "deco/error.hpp"
#include "kernels_internal.hpp"

namespace deco::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const KernelTable* avx2 = avx2_table();
  if (const char* env = std::getenv("DECO_KERNELS")) {
    const std::string_view want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && avx2 != nullptr) return avx2;
  }
  return avx2 != nullptr ? avx2 : &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& scalar_table() { return detail::scalar_impl(); }

const KernelTable* avx2_table() {
#if defined(DECO_WITH_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &detail::avx2_impl() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void set_backend(Backend backend) {
  const KernelTable* table = nullptr;
  switch (backend) {
    case Backend::kScalar: table = &scalar_table(); break;
    case Backend::kAvx2: table = avx2_table(); break;
  }
  if (table == nullptr) throw InvalidInput("kernel backend not available on this machine");
  current().store(table, std::memory_order_release);
}

}  // namespace deco::kernels
