#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ehr {

// Every failure the protocol can report. Codes are stable; the CLI prints
// them and the tests match on them.
enum class ErrorCode {
  kMalformedEncoding,
  kUnknownCurve,
  kIdentityPoint,
  kPointNotOnCurve,
  kInvalidKeyLength,
  kDecryptionFailed,
  kPadTooShort,

  // ledger
  kBadSignature,
  kNonceReplay,
  kNonceGap,
  kUnknownAccount,
  kUnknownTransaction,

  // registry
  kAlreadySetup,
  kNotSetup,
  kDuplicateId,
  kUnknownHospital,
  kMalformedId,
  kRoleMismatch,
  kUnknownDoctor,
  kInvalidPoint,
  kEmptyValidity,

  // record exchange
  kUnregisteredParticipant,
  kNoCertificate,
  kEmptyRecord,
  kUnknownRecord,
  kTagMismatch,
  kDigestMismatch,
  kNotAnAnchor,

  // hospital store
  kBadCertificate,
  kUnknownIndex,
  kEntryDeleted,
  kDuplicateIndex,

  // harness
  kInvalidConfig,
  kIo,
  kAssertionFailed,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ehr
