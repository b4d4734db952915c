#pragma once

// Wire forms exchanged by the protocol actors. All encodings are fixed-order,
// big-endian, and length-prefixed; byte counts in the benchmarks and the
// privacy scans are taken from exactly these bytes.
//
// On-chain payloads start with a one-byte kind:
//   anchor     0x01 | u64 T1 | u16 len | record type | eh1(32)
//   grant      0x02 | R(33) | ST(33) | u32 len | C1
//   tombstone  0x03 | eh1(32)
//
// Off-chain messages:
//   authorization pass   u16 len | hospital id | u64 T1 | k_t(32)
//   masked index entry   X(32) | u32 len | Z | u32 len | K
//   access request       W(32) | u32 len | signature | u32 len | certificate
//   released record      u32 len | Z | u32 len | K | u32 len | CHR
//   appointment          patient pk(33) | u64 time | u32 len | signature

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "ehr/crypto.hpp"
#include "ehr/registry.hpp"

namespace ehr::exchange {

inline constexpr std::size_t kPatientNonceSize = 32;
using PatientNonce = std::array<std::uint8_t, kPatientNonceSize>;  // k_t

enum class PayloadKind : std::uint8_t { kAnchor = 0x01, kGrant = 0x02, kTombstone = 0x03 };

std::optional<PayloadKind> payload_kind(ByteView payload);

/// R1 = {T1, Ty1, eh1}.
struct AnchorRecord {
  std::uint64_t created_at = 0;
  std::string record_type;
  crypto::Digest digest;

  Bytes encode() const;
  static AnchorRecord decode(ByteView payload);
  bool operator==(const AnchorRecord&) const = default;
};

/// Trans = (R_tau || ST || C1).
struct ReshareGrant {
  crypto::GroupPoint r_point;
  crypto::GroupPoint tag;
  crypto::PkCiphertext c1;

  Bytes encode() const;
  static ReshareGrant decode(const crypto::SystemParams& params, ByteView payload);
  bool operator==(const ReshareGrant&) const = default;
};

/// Marks the anchor carrying `digest` as revoked. The anchor itself stays.
struct Tombstone {
  crypto::Digest digest;

  Bytes encode() const;
  static Tombstone decode(ByteView payload);
};

/// A_pass = (H1, T1, k_t). Deliberately carries no doctor or patient
/// identity.
struct AuthorizationPass {
  std::string hospital_id;
  std::uint64_t record_time = 0;
  PatientNonce k_t{};

  Bytes encode() const;
  static AuthorizationPass decode(ByteView bytes);
  bool operator==(const AuthorizationPass&) const = default;
};

/// (X_i, Z_i, K_i) as stored by the hospital.
struct MaskedIndexEntry {
  crypto::Digest x_index;
  Bytes z_masked_txid;  // 32 bytes
  Bytes k_masked_key;   // 16 bytes

  Bytes encode() const;
  static MaskedIndexEntry decode(ByteView bytes);
  bool operator==(const MaskedIndexEntry&) const = default;
};

/// psi = (W || theta || Cer).
struct AccessRequest {
  crypto::Digest w;
  crypto::Signature signature;
  registry::Certificate cert;

  Bytes encode() const;
  static AccessRequest decode(const crypto::SystemParams& params, ByteView bytes);
};

/// (Z_i, K_i, CHR) returned by the hospital.
struct ReleasedRecord {
  Bytes z_masked_txid;
  Bytes k_masked_key;
  crypto::Ciphertext chr;

  Bytes encode() const;
  static ReleasedRecord decode(ByteView bytes);
};

/// A patient's signed appointment booking, presented to the consulting
/// doctor so only registered patients get records created.
struct Appointment {
  crypto::GroupPoint patient_pub;
  std::uint64_t requested_at = 0;
  crypto::Signature signature;

  Bytes signing_bytes() const;
  Bytes encode() const;
};

/// Keyed-hash input H1 || T1 || domain for X (domain 0) and Y (domain 1).
Bytes index_message(const std::string& hospital_id, std::uint64_t record_time,
                    std::uint8_t domain);

}  // namespace ehr::exchange
