// Copyright 2026-present the scd project
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

namespace scd {

enum class ErrorCode {
    // containers
    BadMagic,
    TruncatedPayload,
    TrailingBytes,
    NonFiniteValue,
    ZeroNormRow,
    DuplicateLemma,
    MalformedLine,
    InvalidMeta,
    DimMismatch,
    // solvers
    NonFiniteCost,
    InvalidNetwork,
    Infeasible,
    // clustering
    KTooLarge,
    TooManyLabeledClasses,
    InfeasibleSizeConstraint,
    // naming
    CandidatePoolTooSmall,
    MissingGroundTruthName,
    // taxonomy
    ParseError,
    CyclicTaxonomy,
    Disconnected,
    UnknownLemma,
    UnknownSynset,
    // metrics
    LengthMismatch,
    ModelPredictsTooManyClasses,
    // orchestration
    InvalidArgument,
    ManifestConflict,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure surfaced by the library is an Error carrying a code; the
/// message is human-readable and names the offending item where one exists.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace scd
