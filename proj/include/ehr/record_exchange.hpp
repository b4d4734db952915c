#pragma once

// Record creation/anchoring and access resharing, as patient and doctor
// actors plus the stateless protocol steps they are built from.
//
//   doctor   create_and_anchor_record   CHR = Enc_K(HR), eh1 = h2(CHR), anchor {T1, Ty1, eh1}
//   patient  derive_masked_entry        X = h2(H1||T1||0, k_t), Y = h2(H1||T1||1, k_t),
//                                       Z = tx_id ^ Y, K' = K ^ Y
//   patient  grant_access               ST = h1(r·A_j)·G, R = r·G, C1 = Enc_PKj(A_pass)
//   doctor   accept_grant               ST' = h1(a_j·R)·G == ST, then decrypt C1
//   doctor   build_access_request       W = X', signature over W, certificate
//   doctor   recover_record             unmask, look up anchor, check eh1, decrypt
//
// Each actor is single-threaded; distinct actors may run concurrently.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "ehr/crypto.hpp"
#include "ehr/ledger.hpp"
#include "ehr/messages.hpp"
#include "ehr/registry.hpp"

namespace ehr::exchange {

struct HealthRecord {
  std::string patient_ref;
  Bytes body;
  std::uint64_t created_at = 0;
  std::string record_type;
};

struct EncryptedRecord {
  crypto::Ciphertext ciphertext;  // CHR
  crypto::Digest digest;          // eh1 = h2(CHR)
};

/// Output of anchoring. The ciphertext goes to the hospital store; tx_id,
/// key, and the (hospital, T1) pair go to the patient.
struct AnchoredRecord {
  EncryptedRecord encrypted;
  ledger::TxId tx_id;
  crypto::SymmetricKey key;
  std::uint64_t created_at = 0;
  std::string record_type;
  std::string hospital_id;
};

struct IndexPads {
  crypto::Digest x;  // lookup index
  crypto::Digest y;  // unmasking pad, never leaves its holder
};

IndexPads derive_index_pads(const crypto::SystemParams& params, const std::string& hospital_id,
                            std::uint64_t record_time, const PatientNonce& k_t);

struct MaskedDerivation {
  MaskedIndexEntry entry;
  PatientNonce k_t{};
};

/// Draws a fresh k_t and masks tx_id and key under Y.
MaskedDerivation derive_masked_entry(const crypto::SystemParams& params,
                                     const std::string& hospital_id, std::uint64_t record_time,
                                     const ledger::TxId& tx_id, const crypto::SymmetricKey& key,
                                     Rng& rng);

/// h1(r·A)·G, the designated-verifier tag.
crypto::GroupPoint designation_tag(const crypto::SystemParams& params, const crypto::Scalar& r,
                                   const crypto::GroupPoint& tag_pub);

/// Builds Trans for one grantee without touching the ledger.
ReshareGrant make_grant(const crypto::SystemParams& params, const crypto::GroupPoint& grantee_tag_pub,
                        const crypto::GroupPoint& grantee_pk_enc, const AuthorizationPass& pass,
                        Rng& rng);

/// Tag check first (kTagMismatch), then decryption (kDecryptionFailed).
AuthorizationPass open_grant(const crypto::SystemParams& params, const crypto::Scalar& tag_secret,
                             const crypto::Scalar& enc_secret, const ReshareGrant& grant,
                             std::size_t* decrypt_attempts = nullptr);

/// Unmasks (Z, K) with the pad, fetches the anchor by the recovered TxId,
/// checks h2(CHR) against eh1, and only then decrypts.
/// Errors: kMalformedEncoding, kUnknownTransaction, kNotAnAnchor,
/// kDigestMismatch, kDecryptionFailed.
Bytes recover_record(const crypto::SystemParams& params, const ReleasedRecord& release,
                     const crypto::Digest& y_pad, const ledger::Ledger& ledger);

struct PatientOptions {
  /// Send each grant from a throwaway ledger account instead of the patient's
  /// registered one.
  bool fresh_grant_accounts = false;
};

class Patient {
 public:
  Patient(crypto::SystemParams params, registry::ParticipantIdentity identity,
          PatientOptions options = {});

  const registry::ParticipantIdentity& identity() const { return identity_; }

  Appointment book_appointment(std::uint64_t now, Rng& rng) const;

  /// Keeps k_t for the record and returns the entry for the hospital. The
  /// entry's x_index is the patient's handle for later grants.
  MaskedIndexEntry derive_masked_entry(const AnchoredRecord& record, Rng& rng);

  /// Throws Error(kUnknownRecord) when no k_t is held for the handle.
  std::pair<ReshareGrant, ledger::TxId> grant_access(const crypto::Digest& record_handle,
                                                     const crypto::GroupPoint& grantee_tag_pub,
                                                     const crypto::GroupPoint& grantee_pk_enc,
                                                     Rng& rng, ledger::Ledger& ledger,
                                                     std::uint64_t now);

  std::optional<AuthorizationPass> pass_for(const crypto::Digest& record_handle) const;
  std::size_t record_count() const { return records_.size(); }

 private:
  crypto::SystemParams params_;
  registry::ParticipantIdentity identity_;
  PatientOptions options_;
  std::map<crypto::Digest, AuthorizationPass> records_;
};

class Doctor {
 public:
  Doctor(crypto::SystemParams params, registry::ParticipantIdentity identity,
         registry::DoctorEnrollment enrollment, crypto::GroupPoint ha_public_key);

  const registry::ParticipantIdentity& identity() const { return identity_; }
  const crypto::GroupPoint& tag_public_key() const { return enrollment_.tag_pub; }
  const crypto::GroupPoint& enc_public_key() const { return identity_.enc_keypair.public_key; }
  std::string hospital_id() const;

  void install_certificate(registry::Certificate cert);
  const std::optional<registry::Certificate>& certificate() const { return cert_; }

  /// Errors: kNoCertificate (missing or not valid at now),
  /// kUnregisteredParticipant (appointment does not verify or the patient is
  /// not registered), kEmptyRecord, and anything the ledger rejects.
  AnchoredRecord create_and_anchor_record(const Appointment& appointment,
                                          const registry::Registry& directory, Bytes body,
                                          std::string record_type, std::uint64_t now, Rng& rng,
                                          ledger::Ledger& ledger);

  AuthorizationPass accept_grant(const ReshareGrant& grant);

  /// Recomputes X' and Y'; keeps Y' keyed by W until recover_record.
  AccessRequest build_access_request(const AuthorizationPass& pass, Rng& rng);

  /// Uses the pad kept for `w`, discarding it once recovery succeeds. Throws
  /// Error(kUnknownRecord) if no request with that W is outstanding.
  Bytes recover_record(const crypto::Digest& w, const ReleasedRecord& release,
                       const ledger::Ledger& ledger);

  /// Number of C1 decryptions attempted, for checking that tag mismatches
  /// stop before decryption.
  std::size_t decrypt_attempts() const { return decrypt_attempts_; }

 private:
  crypto::SystemParams params_;
  registry::ParticipantIdentity identity_;
  registry::DoctorEnrollment enrollment_;
  crypto::GroupPoint ha_pk_;
  std::optional<registry::Certificate> cert_;
  std::map<crypto::Digest, crypto::Digest> pending_pads_;  // W -> Y'
  std::size_t decrypt_attempts_ = 0;
};

}  // namespace ehr::exchange
