// Copyright 2026 The MDITE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace mdite {

enum class ErrorKind {
    InvalidSize,
    UnsupportedModel,
    Shape,
    Capacity,
    Contract,
    Numeric,
    Convergence,
    DegenerateData,
    NoCrossing,
    Config,
    Schema,
    Internal,
};

inline const char *error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidSize: return "invalid-size";
        case ErrorKind::UnsupportedModel: return "unsupported-model";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Capacity: return "capacity";
        case ErrorKind::Contract: return "contract";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Convergence: return "convergence";
        case ErrorKind::DegenerateData: return "degenerate-data";
        case ErrorKind::NoCrossing: return "no-crossing";
        case ErrorKind::Config: return "config";
        case ErrorKind::Schema: return "schema";
        case ErrorKind::Internal: return "internal";
    }
    return "unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto an exit status without string matching.
class Error : public std::runtime_error {
   public:
    Error(ErrorKind kind, const std::string &what)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

   private:
    ErrorKind kind_;
};

}  // namespace mdite
