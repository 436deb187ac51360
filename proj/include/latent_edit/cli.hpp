// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace latent_edit {

/// Runs the latent-edit command line. args excludes the program name.
/// Returns the process exit code: 0 success, 2 usage, 3 divergence,
/// 4 backend/capability, 5 io/format.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace latent_edit
