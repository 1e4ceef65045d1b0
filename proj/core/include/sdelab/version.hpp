#pragma once

namespace sdelab {

// Version string embedded in manifests so a result file names the code
// revision that produced it.
inline constexpr const char* kVersion = "sdelab 0.1.0";

}  // namespace sdelab
