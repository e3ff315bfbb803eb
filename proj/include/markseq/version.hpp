#pragma once

namespace markseq {

inline constexpr const char* kEngineVersion = "0.1.0";

}  // namespace markseq
