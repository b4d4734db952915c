#pragma once

// Prime-order elliptic-curve group, hashing, authenticated symmetric
// encryption, curve-integrated public-key encryption and ECDSA signatures.
//
// Canonical byte encodings (used for hashing and signing everywhere else):
//   scalar       32 bytes, big-endian, reduced mod the group order
//   point        33 bytes SEC1 compressed; the identity is the single byte 0x00
//   digest       32 bytes
//   ciphertext   nonce(12) || body || tag(16)            AES-128-GCM
//   pk ciphertext  ephemeral point(33) || ciphertext      (ECIES)
//   signature    r(32) || s(32)                           ECDSA
//
// Curve arithmetic is backed by OpenSSL; all randomness comes from the
// caller's Rng so results are reproducible.

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "ehr/bytes.hpp"
#include "ehr/rng.hpp"

namespace ehr::crypto {

inline constexpr std::size_t kDigestSize = 32;
inline constexpr std::size_t kScalarSize = 32;
inline constexpr std::size_t kPointSize = 33;
inline constexpr std::size_t kSymmetricKeySize = 16;
inline constexpr std::size_t kNonceSize = 12;
inline constexpr std::size_t kTagSize = 16;
inline constexpr std::size_t kSignatureSize = 64;

enum class HashId : std::uint8_t { kSha256 = 1, kSha3_256 = 2 };

std::string_view to_string(HashId id);
/// Accepts "sha256" / "sha3-256"; throws Error(kMalformedEncoding) otherwise.
HashId hash_id_from_string(std::string_view name);

struct Digest {
  std::array<std::uint8_t, kDigestSize> bytes{};

  ByteView view() const { return ByteView(bytes); }
  static Digest from(ByteView b);
  auto operator<=>(const Digest&) const = default;
};

class Scalar {
 public:
  Scalar() = default;
  static Scalar from_u64(std::uint64_t v);
  /// Exactly 32 bytes, taken as-is; callers reduce with reduce_scalar().
  static Scalar from_bytes(ByteView be32);

  const std::array<std::uint8_t, kScalarSize>& bytes() const { return be_; }
  ByteView view() const { return ByteView(be_); }
  bool is_zero() const;
  auto operator<=>(const Scalar&) const = default;

 private:
  std::array<std::uint8_t, kScalarSize> be_{};
};

/// A point in compressed form, or the identity O. Instances produced by this
/// module are always on the curve of the params they came from.
class GroupPoint {
 public:
  GroupPoint() = default;  // identity
  static GroupPoint identity() { return GroupPoint(); }

  bool is_identity() const { return identity_; }
  /// 33 bytes, or {0x00} for the identity.
  Bytes encode() const;
  /// Throws Error(kIdentityPoint) on O.
  const std::array<std::uint8_t, kPointSize>& compressed() const;

  bool operator==(const GroupPoint&) const = default;
  auto operator<=>(const GroupPoint&) const = default;

 private:
  friend GroupPoint make_point_unchecked(const std::array<std::uint8_t, kPointSize>&);
  bool identity_ = true;
  std::array<std::uint8_t, kPointSize> compressed_{};
};

/// Builds a point from bytes already known to be a valid compressed
/// encoding. Internal use; external bytes go through decode_point().
GroupPoint make_point_unchecked(const std::array<std::uint8_t, kPointSize>& c);

/// The public tuple published at system setup.
struct SystemParams {
  std::string curve_id;
  Bytes field_prime;  // q, 32 bytes big-endian
  Bytes order;        // group order, 32 bytes big-endian
  Bytes coeff_a;
  Bytes coeff_b;
  GroupPoint generator;
  HashId h1 = HashId::kSha256;
  HashId h2 = HashId::kSha256;

  Bytes encode() const;
  static SystemParams decode(ByteView bytes);
  bool operator==(const SystemParams&) const = default;
};

struct KeyPair {
  Scalar secret;
  GroupPoint public_key;
};

struct SymmetricKey {
  std::array<std::uint8_t, kSymmetricKeySize> bytes{};

  static SymmetricKey from(ByteView b);  // throws kInvalidKeyLength
  ByteView view() const { return ByteView(bytes); }
  bool operator==(const SymmetricKey&) const = default;
};

struct Ciphertext {
  Bytes bytes;  // nonce || body || tag
  bool operator==(const Ciphertext&) const = default;
};

struct PkCiphertext {
  Bytes bytes;  // ephemeral point || nonce || body || tag
  bool operator==(const PkCiphertext&) const = default;
};

struct Signature {
  Bytes bytes;  // r || s; arbitrary bytes are accepted and simply fail to verify
  bool operator==(const Signature&) const = default;
};

// --- parameters --------------------------------------------------------------

/// Supported ids: "secp256k1" (default), "prime256v1" (alias "secp256r1").
/// Throws Error(kUnknownCurve).
SystemParams setup_params(std::string_view curve_id, HashId h1 = HashId::kSha256,
                          HashId h2 = HashId::kSha256);

/// Generator on curve, order·G == O, and a nonzero discriminant.
bool params_consistent(const SystemParams& params);

// --- group -------------------------------------------------------------------

/// Throws Error(kMalformedEncoding) on a bad length or prefix and
/// Error(kPointNotOnCurve) when the bytes do not decode to a curve point.
GroupPoint decode_point(const SystemParams& params, ByteView bytes);
bool on_curve(const SystemParams& params, const GroupPoint& p);

Scalar reduce_scalar(const SystemParams& params, ByteView big_endian);
Scalar random_scalar(const SystemParams& params, Rng& rng);  // in [1, order-1]
Scalar scalar_add(const SystemParams& params, const Scalar& a, const Scalar& b);
Scalar scalar_mul(const SystemParams& params, const Scalar& a, const Scalar& b);

GroupPoint point_mul(const SystemParams& params, const Scalar& k, const GroupPoint& p);
GroupPoint base_mul(const SystemParams& params, const Scalar& k);
GroupPoint point_add(const SystemParams& params, const GroupPoint& p, const GroupPoint& q);
GroupPoint point_negate(const SystemParams& params, const GroupPoint& p);

KeyPair keygen(const SystemParams& params, Rng& rng);

// --- hashing -----------------------------------------------------------------

Digest hash(HashId id, ByteView msg);
Digest hmac(HashId id, ByteView key, ByteView msg);

/// h1: E \ {O} -> [1, order-1]. Hash of the compressed encoding, reduced.
Scalar h1_point_to_scalar(const SystemParams& params, const GroupPoint& p);
Digest h2_hash(const SystemParams& params, ByteView msg);
/// Keyed h2 is HMAC over the configured hash.
Digest h2_keyed(const SystemParams& params, ByteView msg, ByteView key);

// --- symmetric ---------------------------------------------------------------

SymmetricKey random_symmetric_key(Rng& rng);
Ciphertext sym_encrypt(const SymmetricKey& key, ByteView plaintext, Rng& rng,
                       ByteView aad = {});
/// Throws Error(kDecryptionFailed) on wrong key, any modification, or a
/// malformed ciphertext. Never returns unauthenticated plaintext.
Bytes sym_decrypt(const SymmetricKey& key, const Ciphertext& ct, ByteView aad = {});

// --- public key encryption ---------------------------------------------------

PkCiphertext pk_encrypt(const SystemParams& params, const GroupPoint& recipient,
                        ByteView plaintext, Rng& rng);
/// Throws Error(kDecryptionFailed) when sk is not the recipient key or the
/// ciphertext was modified.
Bytes pk_decrypt(const SystemParams& params, const Scalar& sk, const PkCiphertext& ct);

// --- signatures --------------------------------------------------------------

Signature sign(const SystemParams& params, const Scalar& sk, ByteView msg, Rng& rng);
bool verify(const SystemParams& params, const GroupPoint& pk, ByteView msg,
            const Signature& sig) noexcept;

// --- masking -----------------------------------------------------------------

/// Bytewise XOR with the first value.size() bytes of pad.
/// Throws Error(kPadTooShort) when value is longer than the pad.
Bytes xor_mask(ByteView value, const Digest& pad);

}  // namespace ehr::crypto
