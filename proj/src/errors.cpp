// SPDX-License-Identifier: Apache-2.0
#include "reer/errors.hpp"

namespace reer {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kIndexOutOfRange: return "index-out-of-range";
    case ErrorCode::kEmptyReplacement: return "empty-replacement";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kTemplateRender: return "template-render";
    case ErrorCode::kMissingAsset: return "missing-asset";
    case ErrorCode::kCorpusTooShort: return "corpus-too-short";
    case ErrorCode::kUnknownSymbol: return "unknown-symbol";
    case ErrorCode::kEmptySolution: return "empty-solution";
    case ErrorCode::kGeneratorFailure: return "generator-failure";
    case ErrorCode::kEmptyOutput: return "empty-output";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kProtocol: return "protocol";
    case ErrorCode::kTruncation: return "truncation";
    case ErrorCode::kMissingFixture: return "missing-fixture";
    case ErrorCode::kScorerFailure: return "scorer-failure";
    case ErrorCode::kMalformedRecord: return "malformed-record";
    case ErrorCode::kDuplicateId: return "duplicate-id";
    case ErrorCode::kFilterRejected: return "filter-rejected";
    case ErrorCode::kInsufficientRecords: return "insufficient-records";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace reer
