#pragma once

// Health Authority: system setup, participant registration, doctor
// enrollment, and certificate issuance. The identity directory lives here and
// only here; the tracing lookups are methods of the HA actor.
//
// Certificate canonical encoding (signed prefix, big-endian):
//   u64 not_before | u64 not_after | subject(32) | subject_pk_enc(33)
//   | subject_tag_pub(33) | issuer address(20)
// followed by u32 signature_len | signature.
//
// The certificate subject is a pseudonym, HMAC(HA tracing key, id_string),
// so certificates can travel in access requests without naming the doctor.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>

#include "ehr/crypto.hpp"
#include "ehr/ledger.hpp"

namespace ehr::registry {

enum class Role : std::uint8_t { kHealthAuthority = 0, kHospital = 1, kDoctor = 2, kPatient = 3 };

std::string_view to_string(Role role);

/// ID_u = {M, H_i, P_i}: authority, hospital, and local id. The HA has only
/// `authority`; a hospital has `authority` and `hospital`.
struct IdComponents {
  std::string authority;
  std::string hospital;
  std::string local;

  /// "M/H/L" with empty trailing parts omitted.
  std::string id_string() const;
};

struct ParticipantIdentity {
  Role role{};
  IdComponents id;
  ledger::Address address;
  crypto::KeyPair enc_keypair;

  std::string id_string() const { return id.id_string(); }
};

struct ValidityWindow {
  std::uint64_t not_before = 0;
  std::uint64_t not_after = 0;

  bool contains(std::uint64_t t) const { return not_before <= t && t < not_after; }
  bool operator==(const ValidityWindow&) const = default;
};

/// N = {ID_D || PK_D || A}, the request a doctor forwards to the HA.
struct EnrollmentRequest {
  std::string doctor_id;
  crypto::GroupPoint pk_enc;
  crypto::GroupPoint tag_pub;

  Bytes encode() const;
};

/// Held by the doctor; tag_secret never leaves the doctor actor.
struct DoctorEnrollment {
  std::string doctor_id;
  crypto::GroupPoint pk_enc;
  crypto::GroupPoint tag_pub;
  crypto::Scalar tag_secret;

  EnrollmentRequest request() const { return {doctor_id, pk_enc, tag_pub}; }
};

struct Certificate {
  ValidityWindow validity;
  crypto::Digest subject;
  crypto::GroupPoint subject_pk_enc;
  crypto::GroupPoint subject_tag_pub;
  ledger::Address issuer;
  crypto::Signature signature;

  Bytes body_bytes() const;
  Bytes encode() const;
  static Certificate decode(const crypto::SystemParams& params, ByteView bytes);
  bool operator==(const Certificate&) const = default;
};

enum class CertStatus { kValid, kBadSignature, kNotYetValid, kExpired };

std::string_view to_string(CertStatus s);

CertStatus check_certificate(const crypto::SystemParams& params, const Certificate& cert,
                             const crypto::GroupPoint& ha_pk, std::uint64_t now);

/// True iff the HA signature verifies and now is inside the validity window.
bool verify_certificate(const crypto::SystemParams& params, const Certificate& cert,
                        const crypto::GroupPoint& ha_pk, std::uint64_t now);

/// Doctor side of enrollment: draws a_i, computes A_i = a_i·G.
/// Throws Error(kRoleMismatch) for non-doctor identities.
DoctorEnrollment register_doctor(const crypto::SystemParams& params,
                                 const ParticipantIdentity& doctor, Rng& rng);

class Registry {
 public:
  explicit Registry(ledger::Ledger& ledger);

  /// Publishes params and creates the HA. Once per universe; a second call
  /// throws Error(kAlreadySetup).
  std::pair<crypto::SystemParams, ParticipantIdentity> system_setup(std::string authority_id,
                                                                    Rng& rng);

  bool is_setup() const;
  const crypto::SystemParams& params() const;
  const crypto::GroupPoint& ha_public_key() const;
  const ledger::Address& ha_address() const;

  /// Errors: kNotSetup, kMalformedId, kRoleMismatch (HA role),
  /// kUnknownHospital, kDuplicateId.
  ParticipantIdentity register_participant(Role role, IdComponents id, Rng& rng);

  /// Errors: kUnknownDoctor (not in directory, not a doctor, or pk_enc differs
  /// from the registered key), kInvalidPoint, kEmptyValidity.
  Certificate issue_certificate(const EnrollmentRequest& request, ValidityWindow validity,
                                std::uint64_t now, Rng& rng);

  /// Public membership check; reveals nothing about who holds the address.
  bool is_registered(const ledger::Address& address, Role role) const;

  // HA-only tracing (dispute resolution).
  std::optional<std::string> trace_address(const ledger::Address& address) const;
  std::optional<std::string> trace_subject(const crypto::Digest& subject) const;

  /// Pseudonymous certificate subject for a registered id.
  crypto::Digest subject_for(const std::string& id_string) const;

  /// One line per participant: "<role> <address-hex> <id_string>".
  void export_directory(std::ostream& out) const;

  std::size_t size() const;

 private:
  struct Entry {
    Role role;
    std::string id_string;
    crypto::GroupPoint pk_enc;
  };

  void require_setup() const;

  ledger::Ledger& ledger_;
  mutable std::shared_mutex mutex_;
  std::optional<ParticipantIdentity> ha_;
  crypto::SystemParams params_;
  Bytes tracing_key_;
  std::map<std::string, ledger::Address> by_id_;
  std::map<ledger::Address, Entry> by_address_;
  std::map<crypto::Digest, std::string> by_subject_;
};

}  // namespace ehr::registry
