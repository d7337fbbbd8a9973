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

#ifndef WSNER_ERRORS_H_
#define WSNER_ERRORS_H_

#include <stdexcept>
#include <string>

namespace wsner {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input stream. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string &what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

// Invalid configuration value (thresholds, rule order, patterns, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Failure reported by, or while talking to, an external backend process.
class BackendError : public Error {
 public:
  using Error::Error;
};

// Wrong or missing command-line arguments; the CLI maps this to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace wsner

#endif  // WSNER_ERRORS_H_
