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

#include <csignal>
#include <iostream>

#include "sdconv_cli/commands.hpp"

namespace {

volatile std::sig_atomic_t g_interrupted = 0;

extern "C" void on_sigint(int) { g_interrupted = 1; }

}  // namespace

int main(int argc, char** argv) {
  sdconv::cli::retain_heap_memory();
  std::signal(SIGINT, on_sigint);
  std::signal(SIGTERM, on_sigint);
  return sdconv::cli::run(argc, argv, std::cout, std::cerr,
                          [] { return g_interrupted != 0; });
}
