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

#ifndef WSNER_TESTS_SUPPORT_CHANNEL_PAIR_H_
#define WSNER_TESTS_SUPPORT_CHANNEL_PAIR_H_

#include <unistd.h>

#include <memory>
#include <stdexcept>

#include "wsner/line_channel.h"

namespace wsner::testing {

// Two connected in-process channels backed by pipes. Destroying `client`
// closes its write side, which ends a server loop reading from `server`.
struct ChannelPair {
  std::unique_ptr<FdChannel> client;
  std::unique_ptr<FdChannel> server;
};

inline ChannelPair MakeChannelPair(int timeout_ms = 10000) {
  int up[2], down[2];
  if (pipe(up) != 0 || pipe(down) != 0) throw std::runtime_error("pipe failed");
  return {std::make_unique<FdChannel>(down[0], up[1], true, timeout_ms),
          std::make_unique<FdChannel>(up[0], down[1], true, timeout_ms)};
}

}  // namespace wsner::testing

#endif  // WSNER_TESTS_SUPPORT_CHANNEL_PAIR_H_
