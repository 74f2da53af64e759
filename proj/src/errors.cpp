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

#include "instrec/errors.hpp"

namespace instrec {

const char* to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::config: return "config";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::structural: return "structural";
    case ErrorCategory::lookup: return "lookup";
    case ErrorCategory::io: return "io";
    case ErrorCategory::shape: return "shape";
    case ErrorCategory::state: return "state";
    case ErrorCategory::missing_checkpoint: return "missing_checkpoint";
  }
  return "unknown";
}

}  // namespace instrec
