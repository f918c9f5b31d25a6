// Copyright 2026 The rrwm Authors
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

namespace rrwm {

enum class ErrorKind {
  kFormat,        // malformed file, unknown key, bad magic/version, truncation
  kBounds,        // address or range outside the device
  kCellFailed,    // operation on a worn-out cell
  kNonSeparable,  // calibration classes overlap
  kBudget,        // stress budget exceeds the endurance cap
  kState,         // precondition on device/engine state not met
  kUnreadable,    // watermark bit with a majority of failed cells
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rrwm
