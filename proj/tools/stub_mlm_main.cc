// Copyright 2026 The wsner Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// wsner-stub-mlm: serves a StubMlmBackend over the MLM line protocol, on
// stdin/stdout or on a TCP port.

#include <cstdio>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "wsner/line_channel.h"
#include "wsner/mlm_backend.h"

int main(int argc, char **argv) {
  CLI::App app{"Deterministic MLM backend for tests and demos"};
  std::string config_path;
  int port = -1;
  int protocol = wsner::kWireProtocolVersion;
  app.add_option("--config", config_path, "Stub config (JSON)")->required();
  app.add_option("--port", port, "Listen on this TCP port (0 picks one) instead of stdio");
  app.add_option("--protocol", protocol, "Protocol version to announce");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    wsner::StubMlmBackend backend(wsner::StubMlmConfig::Load(config_path));
    if (port < 0) {
      wsner::FdChannel channel(0, 1, false);
      wsner::ServeMlm(backend, channel, protocol);
      return 0;
    }
    wsner::ListenTcp(
        port,
        [](int bound) {
          fmt::print("listening on {}\n", bound);
          std::fflush(stdout);
        },
        [&](wsner::LineChannel &channel) {
          wsner::ServeMlm(backend, channel, protocol);
          return true;
        });
  } catch (const std::exception &e) {
    fmt::print(stderr, "wsner-stub-mlm: {}\n", e.what());
    return 1;
  }
  return 0;
}
