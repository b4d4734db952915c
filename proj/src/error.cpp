#include "ehr/error.hpp"

namespace ehr {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kMalformedEncoding: return "malformed-encoding";
    case ErrorCode::kUnknownCurve: return "unknown-curve";
    case ErrorCode::kIdentityPoint: return "identity-point";
    case ErrorCode::kPointNotOnCurve: return "point-not-on-curve";
    case ErrorCode::kInvalidKeyLength: return "invalid-key-length";
    case ErrorCode::kDecryptionFailed: return "decryption-failed";
    case ErrorCode::kPadTooShort: return "pad-too-short";
    case ErrorCode::kBadSignature: return "bad-signature";
    case ErrorCode::kNonceReplay: return "nonce-replay";
    case ErrorCode::kNonceGap: return "nonce-gap";
    case ErrorCode::kUnknownAccount: return "unknown-account";
    case ErrorCode::kUnknownTransaction: return "unknown-transaction";
    case ErrorCode::kAlreadySetup: return "already-setup";
    case ErrorCode::kNotSetup: return "not-setup";
    case ErrorCode::kDuplicateId: return "duplicate-id";
    case ErrorCode::kUnknownHospital: return "unknown-hospital";
    case ErrorCode::kMalformedId: return "malformed-id";
    case ErrorCode::kRoleMismatch: return "role-mismatch";
    case ErrorCode::kUnknownDoctor: return "unknown-doctor";
    case ErrorCode::kInvalidPoint: return "invalid-point";
    case ErrorCode::kEmptyValidity: return "empty-validity";
    case ErrorCode::kUnregisteredParticipant: return "unregistered-participant";
    case ErrorCode::kNoCertificate: return "no-certificate";
    case ErrorCode::kEmptyRecord: return "empty-record";
    case ErrorCode::kUnknownRecord: return "unknown-record";
    case ErrorCode::kTagMismatch: return "tag-mismatch";
    case ErrorCode::kDigestMismatch: return "digest-mismatch";
    case ErrorCode::kNotAnAnchor: return "not-an-anchor";
    case ErrorCode::kBadCertificate: return "bad-certificate";
    case ErrorCode::kUnknownIndex: return "unknown-index";
    case ErrorCode::kEntryDeleted: return "entry-deleted";
    case ErrorCode::kDuplicateIndex: return "duplicate-index";
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kAssertionFailed: return "assertion-failed";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail),
      code_(code) {}

}  // namespace ehr
