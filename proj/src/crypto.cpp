#include "ehr/crypto.hpp"

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/obj_mac.h>

#include <algorithm>
#include <limits>
#include <map>
#include <memory>

#include "ehr/error.hpp"

namespace ehr::crypto {

namespace {

struct BnFree {
  void operator()(BIGNUM* b) const { BN_free(b); }
};
struct BnCtxFree {
  void operator()(BN_CTX* c) const { BN_CTX_free(c); }
};
struct PointFree {
  void operator()(EC_POINT* p) const { EC_POINT_free(p); }
};
struct GroupFree {
  void operator()(EC_GROUP* g) const { EC_GROUP_free(g); }
};
struct CipherCtxFree {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};

using BnPtr = std::unique_ptr<BIGNUM, BnFree>;
using BnCtxPtr = std::unique_ptr<BN_CTX, BnCtxFree>;
using PointPtr = std::unique_ptr<EC_POINT, PointFree>;
using GroupPtr = std::unique_ptr<EC_GROUP, GroupFree>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;

[[noreturn]] void fail(const char* what) {
  throw std::runtime_error(std::string("crypto backend: ") + what);
}

BnPtr new_bn() {
  BnPtr b(BN_new());
  if (!b) fail("BN_new");
  return b;
}

BnCtxPtr new_ctx() {
  BnCtxPtr c(BN_CTX_new());
  if (!c) fail("BN_CTX_new");
  return c;
}

BnPtr bn_from(ByteView be) {
  BnPtr b(BN_bin2bn(be.data(), static_cast<int>(be.size()), nullptr));
  if (!b) fail("BN_bin2bn");
  return b;
}

Bytes bn_to_bytes(const BIGNUM* b, std::size_t width) {
  Bytes out(width);
  if (BN_bn2binpad(b, out.data(), static_cast<int>(width)) < 0) fail("BN_bn2binpad");
  return out;
}

std::string canonical_curve(std::string_view id) {
  if (id == "secp256k1") return "secp256k1";
  if (id == "prime256v1" || id == "secp256r1") return "prime256v1";
  throw Error(ErrorCode::kUnknownCurve, std::string(id));
}

int curve_nid(const std::string& canonical) {
  return canonical == "secp256k1" ? NID_secp256k1 : NID_X9_62_prime256v1;
}

// EC_GROUP instances are cached per thread so concurrent callers never share
// one.
const EC_GROUP* group_for(const std::string& curve_id) {
  thread_local std::map<std::string, GroupPtr> cache;
  auto it = cache.find(curve_id);
  if (it != cache.end()) return it->second.get();
  auto canonical = canonical_curve(curve_id);
  GroupPtr g(EC_GROUP_new_by_curve_name(curve_nid(canonical)));
  if (!g) fail("EC_GROUP_new_by_curve_name");
  auto* raw = g.get();
  cache.emplace(curve_id, std::move(g));
  return raw;
}

const EC_GROUP* group_of(const SystemParams& params) { return group_for(params.curve_id); }

PointPtr new_point(const EC_GROUP* g) {
  PointPtr p(EC_POINT_new(g));
  if (!p) fail("EC_POINT_new");
  return p;
}

PointPtr to_ec(const EC_GROUP* g, const GroupPoint& p, BN_CTX* ctx) {
  auto out = new_point(g);
  if (p.is_identity()) {
    if (EC_POINT_set_to_infinity(g, out.get()) != 1) fail("EC_POINT_set_to_infinity");
    return out;
  }
  const auto& c = p.compressed();
  if (EC_POINT_oct2point(g, out.get(), c.data(), c.size(), ctx) != 1) {
    throw Error(ErrorCode::kPointNotOnCurve, "point does not decode on this curve");
  }
  return out;
}

GroupPoint from_ec(const EC_GROUP* g, const EC_POINT* p, BN_CTX* ctx) {
  if (EC_POINT_is_at_infinity(g, p) == 1) return GroupPoint::identity();
  std::array<std::uint8_t, kPointSize> c{};
  auto n = EC_POINT_point2oct(g, p, POINT_CONVERSION_COMPRESSED, c.data(), c.size(), ctx);
  if (n != kPointSize) fail("EC_POINT_point2oct");
  return make_point_unchecked(c);
}

const EVP_MD* md_for(HashId id) {
  switch (id) {
    case HashId::kSha256: return EVP_sha256();
    case HashId::kSha3_256: return EVP_sha3_256();
  }
  fail("unknown hash id");
}

BnPtr order_bn(const SystemParams& params) { return bn_from(params.order); }

// x-coordinate of p reduced mod order.
BnPtr x_mod_order(const EC_GROUP* g, const EC_POINT* p, const BIGNUM* order, BN_CTX* ctx) {
  auto x = new_bn();
  if (EC_POINT_get_affine_coordinates(g, p, x.get(), nullptr, ctx) != 1) {
    fail("EC_POINT_get_affine_coordinates");
  }
  auto r = new_bn();
  if (BN_nnmod(r.get(), x.get(), order, ctx) != 1) fail("BN_nnmod");
  return r;
}

constexpr std::uint8_t kEciesLabel[] = {'e', 'h', 'r', '-', 'e', 'c', 'i', 'e', 's'};

SymmetricKey ecies_key(const SystemParams& params, const GroupPoint& ephemeral,
                       const GroupPoint& shared) {
  ByteWriter w;
  w.raw(ByteView(kEciesLabel, sizeof(kEciesLabel)))
      .raw(view(ephemeral.compressed()))
      .raw(view(shared.compressed()));
  auto d = hash(params.h2, w.bytes());
  return SymmetricKey::from(ByteView(d.bytes.data(), kSymmetricKeySize));
}

}  // namespace

// --- types -------------------------------------------------------------------

std::string_view to_string(HashId id) {
  switch (id) {
    case HashId::kSha256: return "sha256";
    case HashId::kSha3_256: return "sha3-256";
  }
  return "unknown";
}

HashId hash_id_from_string(std::string_view name) {
  if (name == "sha256") return HashId::kSha256;
  if (name == "sha3-256") return HashId::kSha3_256;
  throw Error(ErrorCode::kMalformedEncoding, "unknown hash id " + std::string(name));
}

Digest Digest::from(ByteView b) {
  if (b.size() != kDigestSize) {
    throw Error(ErrorCode::kMalformedEncoding, "digest must be 32 bytes");
  }
  Digest d;
  std::copy(b.begin(), b.end(), d.bytes.begin());
  return d;
}

Scalar Scalar::from_u64(std::uint64_t v) {
  Scalar s;
  for (int i = 0; i < 8; ++i) {
    s.be_[kScalarSize - 1 - i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
  return s;
}

Scalar Scalar::from_bytes(ByteView be32) {
  if (be32.size() != kScalarSize) {
    throw Error(ErrorCode::kMalformedEncoding, "scalar must be 32 bytes");
  }
  Scalar s;
  std::copy(be32.begin(), be32.end(), s.be_.begin());
  return s;
}

bool Scalar::is_zero() const {
  return std::all_of(be_.begin(), be_.end(), [](auto b) { return b == 0; });
}

Bytes GroupPoint::encode() const {
  if (identity_) return Bytes{0x00};
  return Bytes(compressed_.begin(), compressed_.end());
}

const std::array<std::uint8_t, kPointSize>& GroupPoint::compressed() const {
  if (identity_) throw Error(ErrorCode::kIdentityPoint, "identity has no compressed form");
  return compressed_;
}

GroupPoint make_point_unchecked(const std::array<std::uint8_t, kPointSize>& c) {
  GroupPoint p;
  p.identity_ = false;
  p.compressed_ = c;
  return p;
}

SymmetricKey SymmetricKey::from(ByteView b) {
  if (b.size() != kSymmetricKeySize) {
    throw Error(ErrorCode::kInvalidKeyLength, "symmetric key must be 16 bytes");
  }
  SymmetricKey k;
  std::copy(b.begin(), b.end(), k.bytes.begin());
  return k;
}

Bytes SystemParams::encode() const {
  ByteWriter w;
  w.str16(curve_id)
      .blob32(field_prime)
      .blob32(order)
      .blob32(coeff_a)
      .blob32(coeff_b)
      .blob32(generator.encode())
      .u8(static_cast<std::uint8_t>(h1))
      .u8(static_cast<std::uint8_t>(h2));
  return std::move(w).take();
}

SystemParams SystemParams::decode(ByteView bytes) {
  ByteReader r(bytes);
  SystemParams p;
  p.curve_id = r.str16();
  canonical_curve(p.curve_id);
  p.field_prime = r.blob32();
  p.order = r.blob32();
  p.coeff_a = r.blob32();
  p.coeff_b = r.blob32();
  auto g = r.blob32();
  auto h1 = r.u8();
  auto h2 = r.u8();
  r.expect_end();
  auto check_hash = [](std::uint8_t v) {
    if (v != 1 && v != 2) throw Error(ErrorCode::kMalformedEncoding, "bad hash id");
    return static_cast<HashId>(v);
  };
  p.h1 = check_hash(h1);
  p.h2 = check_hash(h2);
  p.generator = decode_point(p, g);
  return p;
}

// --- parameters --------------------------------------------------------------

SystemParams setup_params(std::string_view curve_id, HashId h1, HashId h2) {
  auto canonical = canonical_curve(curve_id);
  const EC_GROUP* g = group_for(canonical);
  auto ctx = new_ctx();
  auto q = new_bn(), a = new_bn(), b = new_bn();
  if (EC_GROUP_get_curve(g, q.get(), a.get(), b.get(), ctx.get()) != 1) {
    fail("EC_GROUP_get_curve");
  }
  SystemParams params;
  params.curve_id = canonical;
  params.field_prime = bn_to_bytes(q.get(), 32);
  params.order = bn_to_bytes(EC_GROUP_get0_order(g), 32);
  params.coeff_a = bn_to_bytes(a.get(), 32);
  params.coeff_b = bn_to_bytes(b.get(), 32);
  params.generator = from_ec(g, EC_GROUP_get0_generator(g), ctx.get());
  params.h1 = h1;
  params.h2 = h2;
  return params;
}

bool params_consistent(const SystemParams& params) {
  try {
    const EC_GROUP* g = group_of(params);
    auto ctx = new_ctx();
    if (params.generator.is_identity() || !on_curve(params, params.generator)) return false;
    auto n_times_g = point_mul(params, Scalar::from_bytes(params.order), params.generator);
    if (!n_times_g.is_identity()) return false;

    auto q = bn_from(params.field_prime);
    auto a = bn_from(params.coeff_a);
    auto b = bn_from(params.coeff_b);
    auto t1 = new_bn(), t2 = new_bn(), k = new_bn();
    // 4a^3 + 27b^2 mod q
    if (BN_mod_sqr(t1.get(), a.get(), q.get(), ctx.get()) != 1 ||
        BN_mod_mul(t1.get(), t1.get(), a.get(), q.get(), ctx.get()) != 1 ||
        BN_set_word(k.get(), 4) != 1 ||
        BN_mod_mul(t1.get(), t1.get(), k.get(), q.get(), ctx.get()) != 1 ||
        BN_mod_sqr(t2.get(), b.get(), q.get(), ctx.get()) != 1 ||
        BN_set_word(k.get(), 27) != 1 ||
        BN_mod_mul(t2.get(), t2.get(), k.get(), q.get(), ctx.get()) != 1 ||
        BN_mod_add(t1.get(), t1.get(), t2.get(), q.get(), ctx.get()) != 1) {
      fail("discriminant");
    }
    if (BN_is_zero(t1.get())) return false;

    auto gq = new_bn();
    if (EC_GROUP_get_curve(g, gq.get(), nullptr, nullptr, ctx.get()) != 1) return false;
    return BN_cmp(gq.get(), q.get()) == 0 &&
           BN_cmp(EC_GROUP_get0_order(g), bn_from(params.order).get()) == 0;
  } catch (const Error&) {
    return false;
  }
}

// --- group -------------------------------------------------------------------

GroupPoint decode_point(const SystemParams& params, ByteView bytes) {
  if (bytes.size() == 1 && bytes[0] == 0x00) return GroupPoint::identity();
  if (bytes.size() != kPointSize || (bytes[0] != 0x02 && bytes[0] != 0x03)) {
    throw Error(ErrorCode::kMalformedEncoding, "point must be 33-byte compressed");
  }
  std::array<std::uint8_t, kPointSize> c{};
  std::copy(bytes.begin(), bytes.end(), c.begin());
  auto p = make_point_unchecked(c);
  auto ctx = new_ctx();
  to_ec(group_of(params), p, ctx.get());  // throws kPointNotOnCurve
  return p;
}

bool on_curve(const SystemParams& params, const GroupPoint& p) {
  if (p.is_identity()) return true;
  try {
    auto ctx = new_ctx();
    const EC_GROUP* g = group_of(params);
    auto ec = to_ec(g, p, ctx.get());
    return EC_POINT_is_on_curve(g, ec.get(), ctx.get()) == 1;
  } catch (const Error&) {
    return false;
  }
}

Scalar reduce_scalar(const SystemParams& params, ByteView big_endian) {
  auto ctx = new_ctx();
  auto v = bn_from(big_endian);
  auto n = order_bn(params);
  if (BN_nnmod(v.get(), v.get(), n.get(), ctx.get()) != 1) fail("BN_nnmod");
  return Scalar::from_bytes(bn_to_bytes(v.get(), kScalarSize));
}

Scalar random_scalar(const SystemParams& params, Rng& rng) {
  auto n = order_bn(params);
  std::array<std::uint8_t, kScalarSize> buf{};
  for (;;) {
    rng.fill(buf);
    auto v = bn_from(buf);
    if (!BN_is_zero(v.get()) && BN_cmp(v.get(), n.get()) < 0) {
      return Scalar::from_bytes(buf);
    }
  }
}

Scalar scalar_add(const SystemParams& params, const Scalar& a, const Scalar& b) {
  auto ctx = new_ctx();
  auto r = new_bn();
  if (BN_mod_add(r.get(), bn_from(a.view()).get(), bn_from(b.view()).get(),
                 order_bn(params).get(), ctx.get()) != 1) {
    fail("BN_mod_add");
  }
  return Scalar::from_bytes(bn_to_bytes(r.get(), kScalarSize));
}

Scalar scalar_mul(const SystemParams& params, const Scalar& a, const Scalar& b) {
  auto ctx = new_ctx();
  auto r = new_bn();
  if (BN_mod_mul(r.get(), bn_from(a.view()).get(), bn_from(b.view()).get(),
                 order_bn(params).get(), ctx.get()) != 1) {
    fail("BN_mod_mul");
  }
  return Scalar::from_bytes(bn_to_bytes(r.get(), kScalarSize));
}

GroupPoint point_mul(const SystemParams& params, const Scalar& k, const GroupPoint& p) {
  const EC_GROUP* g = group_of(params);
  auto ctx = new_ctx();
  auto in = to_ec(g, p, ctx.get());
  auto out = new_point(g);
  auto kb = bn_from(k.view());
  if (EC_POINT_mul(g, out.get(), nullptr, in.get(), kb.get(), ctx.get()) != 1) {
    fail("EC_POINT_mul");
  }
  return from_ec(g, out.get(), ctx.get());
}

GroupPoint base_mul(const SystemParams& params, const Scalar& k) {
  const EC_GROUP* g = group_of(params);
  auto ctx = new_ctx();
  auto out = new_point(g);
  auto kb = bn_from(k.view());
  if (EC_POINT_mul(g, out.get(), kb.get(), nullptr, nullptr, ctx.get()) != 1) {
    fail("EC_POINT_mul");
  }
  return from_ec(g, out.get(), ctx.get());
}

GroupPoint point_add(const SystemParams& params, const GroupPoint& p, const GroupPoint& q) {
  const EC_GROUP* g = group_of(params);
  auto ctx = new_ctx();
  auto a = to_ec(g, p, ctx.get());
  auto b = to_ec(g, q, ctx.get());
  auto out = new_point(g);
  if (EC_POINT_add(g, out.get(), a.get(), b.get(), ctx.get()) != 1) fail("EC_POINT_add");
  return from_ec(g, out.get(), ctx.get());
}

GroupPoint point_negate(const SystemParams& params, const GroupPoint& p) {
  const EC_GROUP* g = group_of(params);
  auto ctx = new_ctx();
  auto a = to_ec(g, p, ctx.get());
  if (EC_POINT_invert(g, a.get(), ctx.get()) != 1) fail("EC_POINT_invert");
  return from_ec(g, a.get(), ctx.get());
}

KeyPair keygen(const SystemParams& params, Rng& rng) {
  KeyPair kp;
  kp.secret = random_scalar(params, rng);
  kp.public_key = base_mul(params, kp.secret);
  return kp;
}

// --- hashing -----------------------------------------------------------------

Digest hash(HashId id, ByteView msg) {
  Digest d;
  unsigned int len = 0;
  if (EVP_Digest(msg.data(), msg.size(), d.bytes.data(), &len, md_for(id), nullptr) != 1 ||
      len != kDigestSize) {
    fail("EVP_Digest");
  }
  return d;
}

Digest hmac(HashId id, ByteView key, ByteView msg) {
  static const std::uint8_t kEmpty = 0;
  Digest d;
  unsigned int len = 0;
  const std::uint8_t* key_ptr = key.empty() ? &kEmpty : key.data();
  const std::uint8_t* msg_ptr = msg.empty() ? &kEmpty : msg.data();
  if (HMAC(md_for(id), key_ptr, static_cast<int>(key.size()), msg_ptr, msg.size(),
           d.bytes.data(), &len) == nullptr ||
      len != kDigestSize) {
    fail("HMAC");
  }
  return d;
}

Scalar h1_point_to_scalar(const SystemParams& params, const GroupPoint& p) {
  if (p.is_identity()) throw Error(ErrorCode::kIdentityPoint, "h1 is undefined on O");
  auto d = hash(params.h1, view(p.compressed()));
  auto ctx = new_ctx();
  auto v = bn_from(d.view());
  auto n_minus_1 = order_bn(params);
  if (BN_sub_word(n_minus_1.get(), 1) != 1 ||
      BN_nnmod(v.get(), v.get(), n_minus_1.get(), ctx.get()) != 1 ||
      BN_add_word(v.get(), 1) != 1) {
    fail("h1 reduction");
  }
  return Scalar::from_bytes(bn_to_bytes(v.get(), kScalarSize));
}

Digest h2_hash(const SystemParams& params, ByteView msg) { return hash(params.h2, msg); }

Digest h2_keyed(const SystemParams& params, ByteView msg, ByteView key) {
  return hmac(params.h2, key, msg);
}

// --- symmetric ---------------------------------------------------------------

SymmetricKey random_symmetric_key(Rng& rng) {
  SymmetricKey k;
  rng.fill(k.bytes);
  return k;
}

namespace {
constexpr std::size_t kChunk = std::size_t{1} << 30;

void gcm_update(EVP_CIPHER_CTX* ctx, bool encrypt, const std::uint8_t* in, std::size_t n,
                std::uint8_t* out) {
  std::size_t done = 0;
  while (done < n) {
    int step = static_cast<int>(std::min(kChunk, n - done));
    int out_len = 0;
    int ok = encrypt ? EVP_EncryptUpdate(ctx, out + done, &out_len, in + done, step)
                     : EVP_DecryptUpdate(ctx, out + done, &out_len, in + done, step);
    if (ok != 1) fail("GCM update");
    done += static_cast<std::size_t>(step);
  }
}

void gcm_aad(EVP_CIPHER_CTX* ctx, bool encrypt, ByteView aad) {
  if (aad.empty()) return;
  int out_len = 0;
  int ok = encrypt ? EVP_EncryptUpdate(ctx, nullptr, &out_len, aad.data(),
                                       static_cast<int>(aad.size()))
                   : EVP_DecryptUpdate(ctx, nullptr, &out_len, aad.data(),
                                       static_cast<int>(aad.size()));
  if (ok != 1) fail("GCM aad");
}
}  // namespace

Ciphertext sym_encrypt(const SymmetricKey& key, ByteView plaintext, Rng& rng, ByteView aad) {
  Ciphertext ct;
  ct.bytes.resize(kNonceSize + plaintext.size() + kTagSize);
  auto* nonce = ct.bytes.data();
  rng.fill(std::span<std::uint8_t>(nonce, kNonceSize));

  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  if (!ctx ||
      EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, key.bytes.data(), nonce) != 1) {
    fail("GCM init");
  }
  gcm_aad(ctx.get(), true, aad);
  gcm_update(ctx.get(), true, plaintext.data(), plaintext.size(), nonce + kNonceSize);
  int out_len = 0;
  if (EVP_EncryptFinal_ex(ctx.get(), nullptr, &out_len) != 1) fail("GCM final");
  auto* tag = nonce + kNonceSize + plaintext.size();
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagSize, tag) != 1) {
    fail("GCM tag");
  }
  return ct;
}

Bytes sym_decrypt(const SymmetricKey& key, const Ciphertext& ct, ByteView aad) {
  if (ct.bytes.size() < kNonceSize + kTagSize) {
    throw Error(ErrorCode::kDecryptionFailed, "ciphertext too short");
  }
  const std::size_t body_len = ct.bytes.size() - kNonceSize - kTagSize;
  const auto* nonce = ct.bytes.data();
  const auto* body = nonce + kNonceSize;
  std::array<std::uint8_t, kTagSize> tag{};
  std::copy_n(body + body_len, kTagSize, tag.begin());

  CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  if (!ctx ||
      EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, key.bytes.data(), nonce) != 1) {
    fail("GCM init");
  }
  gcm_aad(ctx.get(), false, aad);
  Bytes out(body_len);
  gcm_update(ctx.get(), false, body, body_len, out.data());
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagSize, tag.data()) != 1) {
    fail("GCM set tag");
  }
  int out_len = 0;
  if (EVP_DecryptFinal_ex(ctx.get(), nullptr, &out_len) != 1) {
    std::fill(out.begin(), out.end(), 0);
    throw Error(ErrorCode::kDecryptionFailed, "authentication tag mismatch");
  }
  return out;
}

// --- public key encryption ---------------------------------------------------

PkCiphertext pk_encrypt(const SystemParams& params, const GroupPoint& recipient,
                        ByteView plaintext, Rng& rng) {
  if (recipient.is_identity()) {
    throw Error(ErrorCode::kIdentityPoint, "cannot encrypt to the identity");
  }
  auto r = random_scalar(params, rng);
  auto ephemeral = base_mul(params, r);
  auto shared = point_mul(params, r, recipient);
  auto key = ecies_key(params, ephemeral, shared);
  auto eph = ephemeral.encode();
  auto inner = sym_encrypt(key, plaintext, rng, eph);
  PkCiphertext out;
  out.bytes.reserve(eph.size() + inner.bytes.size());
  out.bytes.insert(out.bytes.end(), eph.begin(), eph.end());
  out.bytes.insert(out.bytes.end(), inner.bytes.begin(), inner.bytes.end());
  return out;
}

Bytes pk_decrypt(const SystemParams& params, const Scalar& sk, const PkCiphertext& ct) {
  if (ct.bytes.size() < kPointSize + kNonceSize + kTagSize) {
    throw Error(ErrorCode::kDecryptionFailed, "pk ciphertext too short");
  }
  ByteView eph_bytes(ct.bytes.data(), kPointSize);
  GroupPoint ephemeral;
  try {
    ephemeral = decode_point(params, eph_bytes);
  } catch (const Error&) {
    throw Error(ErrorCode::kDecryptionFailed, "bad ephemeral point");
  }
  if (ephemeral.is_identity()) {
    throw Error(ErrorCode::kDecryptionFailed, "bad ephemeral point");
  }
  auto shared = point_mul(params, sk, ephemeral);
  if (shared.is_identity()) throw Error(ErrorCode::kDecryptionFailed, "degenerate key");
  auto key = ecies_key(params, ephemeral, shared);
  Ciphertext inner{Bytes(ct.bytes.begin() + kPointSize, ct.bytes.end())};
  return sym_decrypt(key, inner, eph_bytes);
}

// --- signatures --------------------------------------------------------------

Signature sign(const SystemParams& params, const Scalar& sk, ByteView msg, Rng& rng) {
  const EC_GROUP* g = group_of(params);
  auto ctx = new_ctx();
  auto n = order_bn(params);
  auto half_n = new_bn();
  if (BN_rshift1(half_n.get(), n.get()) != 1) fail("BN_rshift1");
  auto z = bn_from(h2_hash(params, msg).view());
  auto d = bn_from(sk.view());

  for (;;) {
    auto k_scalar = random_scalar(params, rng);
    auto k = bn_from(k_scalar.view());
    auto rp = new_point(g);
    if (EC_POINT_mul(g, rp.get(), k.get(), nullptr, nullptr, ctx.get()) != 1) {
      fail("EC_POINT_mul");
    }
    auto r = x_mod_order(g, rp.get(), n.get(), ctx.get());
    if (BN_is_zero(r.get())) continue;

    auto kinv = new_bn(), s = new_bn();
    if (BN_mod_inverse(kinv.get(), k.get(), n.get(), ctx.get()) == nullptr ||
        BN_mod_mul(s.get(), r.get(), d.get(), n.get(), ctx.get()) != 1 ||
        BN_mod_add(s.get(), s.get(), z.get(), n.get(), ctx.get()) != 1 ||
        BN_mod_mul(s.get(), s.get(), kinv.get(), n.get(), ctx.get()) != 1) {
      fail("ECDSA arithmetic");
    }
    if (BN_is_zero(s.get())) continue;
    // Canonical low-s form; verify() rejects the high-s twin.
    if (BN_cmp(s.get(), half_n.get()) > 0 && BN_sub(s.get(), n.get(), s.get()) != 1) {
      fail("BN_sub");
    }
    Signature sig;
    sig.bytes = bn_to_bytes(r.get(), 32);
    auto sb = bn_to_bytes(s.get(), 32);
    sig.bytes.insert(sig.bytes.end(), sb.begin(), sb.end());
    return sig;
  }
}

bool verify(const SystemParams& params, const GroupPoint& pk, ByteView msg,
            const Signature& sig) noexcept {
  try {
    if (sig.bytes.size() != kSignatureSize || pk.is_identity()) return false;
    const EC_GROUP* g = group_of(params);
    auto ctx = new_ctx();
    auto n = order_bn(params);
    auto half_n = new_bn();
    if (BN_rshift1(half_n.get(), n.get()) != 1) return false;
    auto r = bn_from(ByteView(sig.bytes.data(), 32));
    auto s = bn_from(ByteView(sig.bytes.data() + 32, 32));
    if (BN_is_zero(r.get()) || BN_cmp(r.get(), n.get()) >= 0 || BN_is_zero(s.get()) ||
        BN_cmp(s.get(), half_n.get()) > 0) {
      return false;
    }
    auto z = bn_from(h2_hash(params, msg).view());
    auto w = new_bn(), u1 = new_bn(), u2 = new_bn();
    if (BN_mod_inverse(w.get(), s.get(), n.get(), ctx.get()) == nullptr ||
        BN_mod_mul(u1.get(), z.get(), w.get(), n.get(), ctx.get()) != 1 ||
        BN_mod_mul(u2.get(), r.get(), w.get(), n.get(), ctx.get()) != 1) {
      return false;
    }
    auto q = to_ec(g, pk, ctx.get());
    auto x = new_point(g);
    if (EC_POINT_mul(g, x.get(), u1.get(), q.get(), u2.get(), ctx.get()) != 1) return false;
    if (EC_POINT_is_at_infinity(g, x.get()) == 1) return false;
    auto v = x_mod_order(g, x.get(), n.get(), ctx.get());
    return BN_cmp(v.get(), r.get()) == 0;
  } catch (...) {
    return false;
  }
}

// --- masking -----------------------------------------------------------------

Bytes xor_mask(ByteView value, const Digest& pad) {
  if (value.size() > pad.bytes.size()) {
    throw Error(ErrorCode::kPadTooShort, "value longer than 32-byte pad");
  }
  Bytes out(value.begin(), value.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] ^= pad.bytes[i];
  return out;
}

}  // namespace ehr::crypto
