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

#include "scd/error.hpp"

namespace scd {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::TruncatedPayload: return "TruncatedPayload";
        case ErrorCode::TrailingBytes: return "TrailingBytes";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::ZeroNormRow: return "ZeroNormRow";
        case ErrorCode::DuplicateLemma: return "DuplicateLemma";
        case ErrorCode::MalformedLine: return "MalformedLine";
        case ErrorCode::InvalidMeta: return "InvalidMeta";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::NonFiniteCost: return "NonFiniteCost";
        case ErrorCode::InvalidNetwork: return "InvalidNetwork";
        case ErrorCode::Infeasible: return "Infeasible";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::TooManyLabeledClasses: return "TooManyLabeledClasses";
        case ErrorCode::InfeasibleSizeConstraint: return "InfeasibleSizeConstraint";
        case ErrorCode::CandidatePoolTooSmall: return "CandidatePoolTooSmall";
        case ErrorCode::MissingGroundTruthName: return "MissingGroundTruthName";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::CyclicTaxonomy: return "CyclicTaxonomy";
        case ErrorCode::Disconnected: return "Disconnected";
        case ErrorCode::UnknownLemma: return "UnknownLemma";
        case ErrorCode::UnknownSynset: return "UnknownSynset";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::ModelPredictsTooManyClasses: return "ModelPredictsTooManyClasses";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ManifestConflict: return "ManifestConflict";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace scd
