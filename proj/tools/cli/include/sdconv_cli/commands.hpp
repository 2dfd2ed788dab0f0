/* Copyright (c) 2026 The sdconv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <functional>
#include <iosfwd>

#include "sdconv/autodiff.hpp"
#include "sdconv_cli/config.hpp"

namespace sdconv::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitIo = 2,
  kExitCellFailure = 3,
  kExitGradcheck = 4,
  kExitInterrupted = 130,
};

/// Polled between units of work; returning true stops the command early.
using CancelFn = std::function<bool()>;

/// Wraps the class scores before the loss in cmd_gradcheck. Lets tests insert
/// an op with a deliberately wrong backward rule.
using ScoreTransform = std::function<ad::Var(ad::Tape& tape, ad::Var scores)>;

// Each command writes into cfg.output_dir and reports to `out`. Configuration
// problems throw ConfigError and file problems throw IoError; run() maps both
// to exit codes.
int cmd_generate(const RunConfig& cfg, std::ostream& out);
int cmd_compare(const RunConfig& cfg, std::ostream& out, const CancelFn& cancelled = {});
int cmd_analyze(const RunConfig& cfg, std::ostream& out);
int cmd_gradcheck(const RunConfig& cfg, std::ostream& out,
                  const ScoreTransform& transform = {});
int cmd_bench(const RunConfig& cfg, std::ostream& out);

/// Keeps freed tensor buffers inside the heap for the rest of the process.
/// A training step frees several megabytes at once; by default glibc returns
/// that memory to the kernel every step and page-faults it back in on the
/// next one, which dominates step-time variance. No-op on other C libraries.
void retain_heap_memory();

/// Full command line: `sdconv <subcommand> [--config FILE] [--set key=value]...`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const CancelFn& cancelled = {});

}  // namespace sdconv::cli
