// Copyright 2026 The condsim Authors.
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

#include "condsim/error.h"

namespace condsim {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kNotUnitNorm: return "NotUnitNorm";
    case ErrorCode::kDegenerateMean: return "DegenerateMean";
    case ErrorCode::kAntipodalPoint: return "AntipodalPoint";
    case ErrorCode::kAntipodalMeans: return "AntipodalMeans";
    case ErrorCode::kNotTangent: return "NotTangent";
    case ErrorCode::kRankZero: return "RankZero";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kBaseMismatch: return "BaseMismatch";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kZeroProjection: return "ZeroProjection";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kLabelCoverage: return "LabelCoverage";
    case ErrorCode::kMissingLabel: return "MissingLabel";
    case ErrorCode::kEmptyGroup: return "EmptyGroup";
    case ErrorCode::kTooFewItems: return "TooFewItems";
    case ErrorCode::kInsufficientDimension: return "InsufficientDimension";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kTrailingBytes: return "TrailingBytes";
    case ErrorCode::kDimensionOverflow: return "DimensionOverflow";
    case ErrorCode::kOrthonormalityViolation: return "OrthonormalityViolation";
    case ErrorCode::kBadManifest: return "BadManifest";
  }
  return "Unknown";
}

}  // namespace condsim
