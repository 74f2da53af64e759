// Copyright 2026 The instrec Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace instrec {

// Failure categories. The CLI reports these on stderr as a single
// machine-parsable line: "error: <category>: <message>".
enum class ErrorCategory {
  usage,               // bad flags / arguments
  config,              // invalid configuration values
  parse,               // malformed input file
  structural,          // violated data-model invariant (taxonomy, labels)
  lookup,              // unknown label / key
  io,                  // filesystem failure
  shape,               // tensor / matrix dimension mismatch
  state,               // operation invalid in the current state
  missing_checkpoint,  // evaluate/infer without a trained model
};

const char* to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
  throw Error(category, message);
}

}  // namespace instrec
