// Copyright 2026 The gercodes Authors
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
#include <string_view>

namespace ger {

enum class ErrorKind {
    kIo,
    kParse,
    kDuplicateToken,
    kEmptyLine,
    kMissingUnknownToken,
    kEmptyInput,
    kInvalidArgument,
    kCodeSpaceTooSmall,
    kUniquenessUnattainable,
    kDuplicateCode,
    kNonFinite,
    kDimensionMismatch,
    kDiverged,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kIo: return "IoError";
        case ErrorKind::kParse: return "ParseError";
        case ErrorKind::kDuplicateToken: return "DuplicateToken";
        case ErrorKind::kEmptyLine: return "EmptyLine";
        case ErrorKind::kMissingUnknownToken: return "MissingUnknownToken";
        case ErrorKind::kEmptyInput: return "EmptyInput";
        case ErrorKind::kInvalidArgument: return "InvalidArgument";
        case ErrorKind::kCodeSpaceTooSmall: return "CodeSpaceTooSmall";
        case ErrorKind::kUniquenessUnattainable: return "UniquenessUnattainable";
        case ErrorKind::kDuplicateCode: return "DuplicateCode";
        case ErrorKind::kNonFinite: return "NonFinite";
        case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
        case ErrorKind::kDiverged: return "Diverged";
    }
    return "Unknown";
}

// Every failure surfaced by the library. The kind is stable and testable,
// the message carries file/line/entity context.
class Error : public std::runtime_error {
   public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

   private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, std::string_view message) {
    if (!condition) {
        throw Error(kind, std::string(message));
    }
}

}  // namespace ger
