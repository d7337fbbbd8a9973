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

#include "wsner/line_channel.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "wsner/errors.h"

namespace wsner {
namespace {

std::string ErrnoText() { return std::strerror(errno); }

void IgnoreSigpipe() {
  static const bool done = [] {
    signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

class ProcessChannel : public LineChannel {
 public:
  ProcessChannel(pid_t pid, int read_fd, int write_fd, int timeout_ms)
      : pid_(pid), channel_(read_fd, write_fd, true, timeout_ms) {}

  ~ProcessChannel() override {
    channel_.CloseWrite();
    int status = 0;
    // Give the child a chance to exit on end of input before killing it.
    for (int i = 0; i < 200; ++i) {
      if (waitpid(pid_, &status, WNOHANG) != 0) return;
      usleep(10000);
    }
    kill(pid_, SIGTERM);
    waitpid(pid_, &status, 0);
  }

  void WriteLine(std::string_view line) override { channel_.WriteLine(line); }
  std::optional<std::string> ReadLine() override { return channel_.ReadLine(); }

 private:
  pid_t pid_;
  FdChannel channel_;
};

}  // namespace

FdChannel::FdChannel(int read_fd, int write_fd, bool owns, int timeout_ms)
    : read_fd_(read_fd), write_fd_(write_fd), owns_(owns), timeout_ms_(timeout_ms) {}

FdChannel::~FdChannel() {
  if (!owns_) return;
  CloseWrite();
  if (read_fd_ >= 0) close(read_fd_);
}

void FdChannel::CloseWrite() {
  if (!owns_ || write_fd_ < 0) return;
  if (write_fd_ == read_fd_) {
    shutdown(write_fd_, SHUT_WR);
  } else {
    close(write_fd_);
  }
  write_fd_ = -1;
}

void FdChannel::WriteLine(std::string_view line) {
  if (line.find('\n') != std::string_view::npos) {
    throw BackendError("record contains a newline");
  }
  if (write_fd_ < 0) throw BackendError("channel closed for writing");
  std::string data(line);
  data.push_back('\n');
  size_t written = 0;
  while (written < data.size()) {
    ssize_t n = write(write_fd_, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw BackendError("write failed: " + ErrnoText());
    }
    written += static_cast<size_t>(n);
  }
}

std::optional<std::string> FdChannel::ReadLine() {
  for (;;) {
    size_t newline = buffer_.find('\n');
    if (newline != std::string::npos) {
      std::string line = buffer_.substr(0, newline);
      buffer_.erase(0, newline + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (eof_) {
      if (buffer_.empty()) return std::nullopt;
      std::string line = std::move(buffer_);
      buffer_.clear();
      return line;
    }
    if (timeout_ms_ >= 0) {
      pollfd pfd{read_fd_, POLLIN, 0};
      int ready = poll(&pfd, 1, timeout_ms_);
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw BackendError("poll failed: " + ErrnoText());
      }
      if (ready == 0) throw BackendError("timed out waiting for backend response");
    }
    char chunk[4096];
    ssize_t n = read(read_fd_, chunk, sizeof(chunk));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw BackendError("read failed: " + ErrnoText());
    }
    if (n == 0) {
      eof_ = true;
    } else {
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }
}

std::unique_ptr<LineChannel> SpawnProcess(const std::string &command,
                                          int timeout_ms) {
  IgnoreSigpipe();
  int to_child[2];
  int from_child[2];
  if (pipe(to_child) != 0) throw BackendError("pipe failed: " + ErrnoText());
  if (pipe(from_child) != 0) {
    close(to_child[0]);
    close(to_child[1]);
    throw BackendError("pipe failed: " + ErrnoText());
  }
  pid_t pid = fork();
  if (pid < 0) throw BackendError("fork failed: " + ErrnoText());
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char *>(nullptr));
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);
  return std::make_unique<ProcessChannel>(pid, from_child[0], to_child[1],
                                          timeout_ms);
}

std::unique_ptr<LineChannel> ConnectTcp(const std::string &host, int port,
                                        int timeout_ms) {
  IgnoreSigpipe();
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo *result = nullptr;
  const std::string service = std::to_string(port);
  int rc = getaddrinfo(host.c_str(), service.c_str(), &hints, &result);
  if (rc != 0) {
    throw BackendError("cannot resolve " + host + ": " + gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo *ai = result; ai != nullptr; ai = ai->ai_next) {
    fd = socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    close(fd);
    fd = -1;
  }
  freeaddrinfo(result);
  if (fd < 0) {
    throw BackendError("cannot connect to " + host + ":" + service + ": " +
                       ErrnoText());
  }
  return std::make_unique<FdChannel>(fd, fd, true, timeout_ms);
}

std::unique_ptr<LineChannel> OpenEndpoint(const std::string &endpoint,
                                          int timeout_ms) {
  if (endpoint.rfind("exec:", 0) == 0) {
    return SpawnProcess(endpoint.substr(5), timeout_ms);
  }
  if (endpoint.rfind("tcp:", 0) == 0) {
    const std::string rest = endpoint.substr(4);
    const size_t colon = rest.rfind(':');
    if (colon == std::string::npos) {
      throw BackendError("tcp endpoint needs host:port, got '" + rest + "'");
    }
    int port = 0;
    try {
      port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception &) {
      throw BackendError("invalid port in endpoint '" + endpoint + "'");
    }
    return ConnectTcp(rest.substr(0, colon), port, timeout_ms);
  }
  throw BackendError("unsupported endpoint '" + endpoint +
                     "' (expected exec:<command> or tcp:<host>:<port>)");
}

void ListenTcp(int port, const std::function<void(int)> &on_listen,
               const std::function<bool(LineChannel &)> &serve) {
  IgnoreSigpipe();
  int fd = socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw BackendError("socket failed: " + ErrnoText());
  int one = 1;
  setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (bind(fd, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) != 0 ||
      listen(fd, 4) != 0) {
    std::string message = ErrnoText();
    close(fd);
    throw BackendError("cannot listen on port " + std::to_string(port) + ": " +
                       message);
  }
  socklen_t len = sizeof(addr);
  getsockname(fd, reinterpret_cast<sockaddr *>(&addr), &len);
  if (on_listen) on_listen(ntohs(addr.sin_port));
  for (;;) {
    int client = accept(fd, nullptr, nullptr);
    if (client < 0) {
      if (errno == EINTR) continue;
      close(fd);
      throw BackendError("accept failed: " + ErrnoText());
    }
    FdChannel channel(client, client, true);
    if (!serve(channel)) break;
  }
  close(fd);
}

}  // namespace wsner
