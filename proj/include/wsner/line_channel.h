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

#ifndef WSNER_LINE_CHANNEL_H_
#define WSNER_LINE_CHANNEL_H_

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace wsner {

// Version of the newline-delimited JSON protocols spoken with the masked-LM
// backend and tagger plugins. See docs/protocol.md.
inline constexpr int kWireProtocolVersion = 1;

// A bidirectional stream of newline-terminated records.
class LineChannel {
 public:
  virtual ~LineChannel() = default;

  // Writes `line` followed by '\n'. `line` must not contain a newline.
  virtual void WriteLine(std::string_view line) = 0;

  // Returns the next line without its terminator, or nullopt at end of
  // stream. Throws BackendError on timeout or I/O failure.
  virtual std::optional<std::string> ReadLine() = 0;
};

// Channel over a pair of file descriptors. Owns them when `owns` is set.
class FdChannel : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd, bool owns, int timeout_ms = -1);
  ~FdChannel() override;

  FdChannel(const FdChannel &) = delete;
  FdChannel &operator=(const FdChannel &) = delete;

  void WriteLine(std::string_view line) override;
  std::optional<std::string> ReadLine() override;

  // Closes the write side so the peer sees end of input.
  void CloseWrite();

 private:
  int read_fd_;
  int write_fd_;
  bool owns_;
  int timeout_ms_;
  std::string buffer_;
  bool eof_ = false;
};

// Opens an endpoint. Accepted forms:
//   exec:<shell command>   spawn a child and talk over its stdin/stdout
//   tcp:<host>:<port>      connect to a listening server
// Throws BackendError if the endpoint cannot be reached.
std::unique_ptr<LineChannel> OpenEndpoint(const std::string &endpoint,
                                          int timeout_ms = 120000);

std::unique_ptr<LineChannel> SpawnProcess(const std::string &command,
                                          int timeout_ms = 120000);
std::unique_ptr<LineChannel> ConnectTcp(const std::string &host, int port,
                                        int timeout_ms = 120000);

// Accepts connections on `port` (0 picks a free port, reported through
// `on_listen`) and hands each one to `serve` until it returns false.
void ListenTcp(int port, const std::function<void(int)> &on_listen,
               const std::function<bool(LineChannel &)> &serve);

}  // namespace wsner

#endif  // WSNER_LINE_CHANNEL_H_
