#pragma once

namespace npcert {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace npcert
