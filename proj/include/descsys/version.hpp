#pragma once

namespace descsys {
inline constexpr const char* kVersion = "0.1.0";
}
