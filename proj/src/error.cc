// Copyright 2026 The voxshield Authors
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

#include "voxshield/error.h"

namespace voxshield {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFileNotFound: return "file_not_found";
    case ErrorCode::kIoFailure: return "io_failure";
    case ErrorCode::kTruncatedHeader: return "truncated_header";
    case ErrorCode::kUnsupportedEncoding: return "unsupported_encoding";
    case ErrorCode::kUnsupportedChannelCount: return "unsupported_channel_count";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kMalformedLine: return "malformed_line";
    case ErrorCode::kDuplicateEntry: return "duplicate_entry";
    case ErrorCode::kInvalidLabel: return "invalid_label";
    case ErrorCode::kRateMismatch: return "rate_mismatch";
    case ErrorCode::kLengthMismatch: return "length_mismatch";
    case ErrorCode::kSilentInput: return "silent_input";
    case ErrorCode::kZeroEnergy: return "zero_energy";
    case ErrorCode::kDiverged: return "diverged";
    case ErrorCode::kNonFiniteGradient: return "non_finite_gradient";
    case ErrorCode::kBadModelFile: return "bad_model_file";
  }
  return "unknown";
}

}  // namespace voxshield
