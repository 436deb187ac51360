// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace latent_edit {

enum class ErrorCode {
  // io / format
  BadMagic,
  VersionUnsupported,
  TruncatedPayload,
  ManifestMismatch,
  IoFailure,
  UnsupportedDtype,
  EmptyIndex,
  DuplicateId,
  ZeroNormRow,
  NonFinite,
  WrongArtifactKind,
  DimensionMismatch,
  // invalid input
  Usage,
  InvalidArgument,
  KTooLarge,
  ZeroNormQuery,
  DegenerateData,
  NoConvergence,
  ZeroDirection,
  TooFewSamples,
  OverlappingSets,
  UnknownId,
  // divergence
  DivergentNormalization,
  AllCombinationsDiverged,
  // backend / capability
  BackendFailure,
  CapabilityMissing,
  InversionUnsupported,
  DecodeError,
  FingerprintMismatch,
};

/// Process exit codes shared by the CLI and the HTTP error bodies.
enum class ExitCode : int {
  Success = 0,
  Usage = 2,
  Divergence = 3,
  Backend = 4,
  IoFormat = 5,
};

std::string_view error_code_name(ErrorCode code) noexcept;
ExitCode exit_code_for(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ExitCode exit_code() const noexcept { return exit_code_for(code_); }

 private:
  ErrorCode code_;
};

}  // namespace latent_edit
