// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "deco/kernels.hpp"

namespace deco::kernels::detail {

const KernelTable& scalar_impl();
#if defined(DECO_WITH_AVX2)
const KernelTable& avx2_impl();
#endif

}  // namespace deco::kernels::detail
