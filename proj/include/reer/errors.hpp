// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reer {

enum class ErrorCode {
  kEmptyInput,
  kIndexOutOfRange,
  kEmptyReplacement,
  kInvalidArgument,
  kTemplateRender,
  kMissingAsset,
  kCorpusTooShort,
  kUnknownSymbol,
  kEmptySolution,
  kGeneratorFailure,
  kEmptyOutput,
  kTransport,
  kProtocol,
  kTruncation,
  kMissingFixture,
  kScorerFailure,
  kMalformedRecord,
  kDuplicateId,
  kFilterRejected,
  kInsufficientRecords,
  kSchema,
  kOutOfRange,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code is the
/// stable, machine-checkable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Transport errors are the only ones worth retrying.
inline bool is_retryable(ErrorCode code) { return code == ErrorCode::kTransport; }

}  // namespace reer
