// SPDX-FileCopyrightText: (c) 2026 The latent-edit Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "latent_edit/error.hpp"

namespace latent_edit {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::ManifestMismatch: return "ManifestMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ZeroNormRow: return "ZeroNormRow";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::WrongArtifactKind: return "WrongArtifactKind";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Usage: return "Usage";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::ZeroNormQuery: return "ZeroNormQuery";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ZeroDirection: return "ZeroDirection";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::OverlappingSets: return "OverlappingSets";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::DivergentNormalization: return "DivergentNormalization";
    case ErrorCode::AllCombinationsDiverged: return "AllCombinationsDiverged";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::CapabilityMissing: return "CapabilityMissing";
    case ErrorCode::InversionUnsupported: return "InversionUnsupported";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::FingerprintMismatch: return "FingerprintMismatch";
  }
  return "Unknown";
}

ExitCode exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DivergentNormalization:
    case ErrorCode::AllCombinationsDiverged:
      return ExitCode::Divergence;
    case ErrorCode::BackendFailure:
    case ErrorCode::CapabilityMissing:
    case ErrorCode::InversionUnsupported:
    case ErrorCode::DecodeError:
    case ErrorCode::FingerprintMismatch:
      return ExitCode::Backend;
    case ErrorCode::BadMagic:
    case ErrorCode::VersionUnsupported:
    case ErrorCode::TruncatedPayload:
    case ErrorCode::ManifestMismatch:
    case ErrorCode::IoFailure:
    case ErrorCode::UnsupportedDtype:
    case ErrorCode::EmptyIndex:
    case ErrorCode::DuplicateId:
    case ErrorCode::ZeroNormRow:
    case ErrorCode::NonFinite:
    case ErrorCode::WrongArtifactKind:
    case ErrorCode::DimensionMismatch:
      return ExitCode::IoFormat;
    default:
      return ExitCode::Usage;
  }
}

}  // namespace latent_edit
