// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace lineocr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the `lineocr` tool. Returns the process exit code.
int cli_dispatch(int argc, char** argv);

}  // namespace lineocr
