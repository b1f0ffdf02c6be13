// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace deco {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace deco
