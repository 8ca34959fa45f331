#pragma once

namespace txnsim {
inline constexpr const char* kVersion = "0.1.0";
}
