// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: train, eval, inspect, kernels and smoke.

#pragma once

#include <ostream>

namespace wavecnn {

/// Parses argv and runs one subcommand. Returns 0 on success, 1 on a runtime
/// failure and 2 on a usage error (unknown subcommand or flag).
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wavecnn
