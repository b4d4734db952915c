#include <gtest/gtest.h>

#include <set>

#include "ehr/crypto.hpp"
#include "ehr/error.hpp"
#include "ehr/rng.hpp"
#include "support/naive_curve.hpp"

using namespace ehr;
using namespace ehr::crypto;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an ehr::Error";
  return ErrorCode::kIo;
}

Bytes hex(const char* h) { return from_hex(h); }

struct CurveCase {
  const char* id;
  naive::Curve (*curve)();
};

class GroupTest : public ::testing::TestWithParam<CurveCase> {
 protected:
  SystemParams params = setup_params(GetParam().id);
  naive::Curve curve = GetParam().curve();
};

naive::Point to_naive(const naive::Curve& c, const GroupPoint& p) {
  if (p.is_identity()) return {};
  auto pt = naive::decompress(c, view(p.compressed()));
  EXPECT_TRUE(pt.has_value());
  return *pt;
}

}  // namespace

TEST(Hash, Sha256KnownAnswers) {
  EXPECT_EQ(to_hex(hash(HashId::kSha256, {}).view()),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(to_hex(hash(HashId::kSha256, to_bytes("abc")).view()),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Hash, Sha3KnownAnswers) {
  EXPECT_EQ(to_hex(hash(HashId::kSha3_256, {}).view()),
            "a7ffc6f8bf1ed76651c14756a061d662f580ff4de43b49fa82d80a4b80f8434a");
  EXPECT_EQ(to_hex(hash(HashId::kSha3_256, to_bytes("abc")).view()),
            "3a985da74fe225b2045c172d6bd390bd855f086e3e9d525b46bfe24511431532");
}

TEST(Hash, HmacRfc4231Case2) {
  auto mac = hmac(HashId::kSha256, to_bytes("Jefe"), to_bytes("what do ya want for nothing?"));
  EXPECT_EQ(to_hex(mac.view()),
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

TEST(Hash, KeyedH2IsHmacWithKeyFirst) {
  auto params = setup_params("secp256k1", HashId::kSha256, HashId::kSha3_256);
  auto key = to_bytes("k");
  auto msg = to_bytes("message");
  EXPECT_EQ(h2_keyed(params, msg, key), hmac(HashId::kSha3_256, key, msg));
  EXPECT_EQ(h2_hash(params, msg), hash(HashId::kSha3_256, msg));
}

TEST(Params, UnknownCurveRejected) {
  EXPECT_EQ(code_of([] { setup_params("curve25519"); }), ErrorCode::kUnknownCurve);
}

TEST(Params, EncodeDecodeRoundTrip) {
  auto params = setup_params("prime256v1", HashId::kSha3_256, HashId::kSha256);
  EXPECT_EQ(SystemParams::decode(params.encode()), params);
  EXPECT_TRUE(params_consistent(params));
}

TEST(Params, Secp256r1Alias) {
  EXPECT_EQ(setup_params("secp256r1").generator, setup_params("prime256v1").generator);
}

TEST_P(GroupTest, ConstantsMatchPublishedCurve) {
  EXPECT_EQ(naive::from_be(params.field_prime), curve.p);
  EXPECT_EQ(naive::from_be(params.order), curve.n);
  EXPECT_EQ(naive::from_be(params.coeff_a), curve.a);
  EXPECT_EQ(naive::from_be(params.coeff_b), curve.b);
  EXPECT_EQ(params.generator.encode(), naive::compress(naive::generator(curve)));
  EXPECT_TRUE(params_consistent(params));
}

TEST_P(GroupTest, SmallMultiplesMatchRepeatedAddition) {
  Rng rng(7);
  for (int trial = 0; trial < 3; ++trial) {
    auto P = base_mul(params, random_scalar(params, rng));
    auto np = to_naive(curve, P);
    for (unsigned k = 1; k <= 64; ++k) {
      ASSERT_EQ(point_mul(params, Scalar::from_u64(k), P).encode(),
                naive::compress(naive::repeated_add(curve, np, k)))
          << "k=" << k;
    }
  }
}

TEST_P(GroupTest, FullScalarsMatchDoubleAndAdd) {
  Rng rng(8);
  for (int trial = 0; trial < 8; ++trial) {
    auto k = random_scalar(params, rng);
    auto expected = naive::double_and_add(curve, naive::generator(curve), naive::from_be(k.view()));
    EXPECT_EQ(base_mul(params, k).encode(), naive::compress(expected));
  }
}

TEST_P(GroupTest, OrderTimesPointIsIdentity) {
  Rng rng(9);
  auto P = base_mul(params, random_scalar(params, rng));
  auto n = Scalar::from_bytes(params.order);
  EXPECT_TRUE(point_mul(params, n, P).is_identity());
  EXPECT_TRUE(point_mul(params, Scalar{}, P).is_identity());
}

TEST_P(GroupTest, GroupLaws) {
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    auto P = base_mul(params, random_scalar(params, rng));
    auto Q = base_mul(params, random_scalar(params, rng));
    auto R = base_mul(params, random_scalar(params, rng));
    EXPECT_EQ(point_add(params, P, Q), point_add(params, Q, P));
    EXPECT_EQ(point_add(params, point_add(params, P, Q), R),
              point_add(params, P, point_add(params, Q, R)));
    EXPECT_TRUE(point_add(params, P, point_negate(params, P)).is_identity());
    EXPECT_EQ(point_add(params, P, GroupPoint::identity()), P);
    EXPECT_EQ(to_naive(curve, point_add(params, P, Q)),
              naive::add(curve, to_naive(curve, P), to_naive(curve, Q)));
  }
}

TEST_P(GroupTest, ScalarArithmeticDistributes) {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    auto a = random_scalar(params, rng), b = random_scalar(params, rng);
    EXPECT_EQ(base_mul(params, scalar_add(params, a, b)),
              point_add(params, base_mul(params, a), base_mul(params, b)));
    EXPECT_EQ(base_mul(params, scalar_mul(params, a, b)),
              point_mul(params, a, base_mul(params, b)));
  }
}

TEST_P(GroupTest, EcdhIsSymmetric) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = keygen(params, rng), b = keygen(params, rng);
    EXPECT_EQ(point_mul(params, a.secret, b.public_key), point_mul(params, b.secret, a.public_key));
  }
}

TEST_P(GroupTest, DecodeRejectsBadPoints) {
  auto good = params.generator.encode();
  EXPECT_EQ(decode_point(params, good), params.generator);
  EXPECT_TRUE(decode_point(params, Bytes{0x00}).is_identity());

  auto bad_prefix = good;
  bad_prefix[0] = 0x04;
  EXPECT_EQ(code_of([&] { decode_point(params, bad_prefix); }), ErrorCode::kMalformedEncoding);
  EXPECT_EQ(code_of([&] { decode_point(params, Bytes(good.begin(), good.end() - 1)); }),
            ErrorCode::kMalformedEncoding);

  // Find an x with no curve point using the oracle, then expect rejection.
  for (unsigned x = 1;; ++x) {
    Bytes enc{0x02};
    auto xb = naive::to_be(x, 32);
    enc.insert(enc.end(), xb.begin(), xb.end());
    if (naive::decompress(curve, enc)) continue;
    EXPECT_EQ(code_of([&] { decode_point(params, enc); }), ErrorCode::kPointNotOnCurve);
    break;
  }
}

TEST_P(GroupTest, H1MapsIntoNonzeroRange) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    auto P = base_mul(params, random_scalar(params, rng));
    auto d = hash(params.h1, view(P.compressed()));
    auto expected = naive::mod(naive::from_be(d.view()), curve.n - 1) + 1;
    EXPECT_EQ(naive::from_be(h1_point_to_scalar(params, P).view()), expected);
  }
  EXPECT_EQ(code_of([&] { h1_point_to_scalar(params, GroupPoint::identity()); }),
            ErrorCode::kIdentityPoint);
}

TEST_P(GroupTest, SignaturesVerifyUnderTextbookEcdsa) {
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    auto kp = keygen(params, rng);
    auto msg = rng.bytes(1 + rng.uniform(200));
    auto sig = sign(params, kp.secret, msg, rng);
    ASSERT_EQ(sig.bytes.size(), kSignatureSize);
    EXPECT_TRUE(verify(params, kp.public_key, msg, sig));
    EXPECT_TRUE(naive::ecdsa_verify(curve, to_naive(curve, kp.public_key),
                                    h2_hash(params, msg).view(), sig.bytes));
    // low-s
    EXPECT_LE(naive::from_be(ByteView(sig.bytes).subspan(32)), curve.n / 2);
  }
}

TEST_P(GroupTest, SignatureNegatives) {
  Rng rng(15);
  auto kp = keygen(params, rng), other = keygen(params, rng);
  auto msg = to_bytes("W index bytes");
  auto sig = sign(params, kp.secret, msg, rng);
  EXPECT_FALSE(verify(params, other.public_key, msg, sig));
  EXPECT_FALSE(verify(params, kp.public_key, to_bytes("W index bytez"), sig));
  EXPECT_FALSE(verify(params, kp.public_key, msg, Signature{}));
  EXPECT_FALSE(verify(params, kp.public_key, msg, Signature{Bytes(64, 0)}));
  EXPECT_FALSE(verify(params, GroupPoint::identity(), msg, sig));

  // The high-s twin is mathematically valid but not canonical.
  auto s = naive::from_be(ByteView(sig.bytes).subspan(32));
  auto twin = sig;
  auto hs = naive::to_be(curve.n - s, 32);
  std::copy(hs.begin(), hs.end(), twin.bytes.begin() + 32);
  EXPECT_TRUE(naive::ecdsa_verify(curve, to_naive(curve, kp.public_key),
                                  h2_hash(params, msg).view(), twin.bytes));
  EXPECT_FALSE(verify(params, kp.public_key, msg, twin));

  for (std::size_t i = 0; i < sig.bytes.size(); ++i) {
    auto bad = sig;
    bad.bytes[i] ^= 0x80;
    EXPECT_FALSE(verify(params, kp.public_key, msg, bad)) << i;
  }
}

TEST_P(GroupTest, PublicKeyEncryptionRoundTripAndWrongKey) {
  Rng rng(16);
  auto kp = keygen(params, rng);
  for (std::size_t len : {0, 1, 31, 32, 33, 1000}) {
    auto msg = rng.bytes(len);
    auto ct = pk_encrypt(params, kp.public_key, msg, rng);
    EXPECT_EQ(pk_decrypt(params, kp.secret, ct), msg);
  }
  auto ct = pk_encrypt(params, kp.public_key, to_bytes("pass"), rng);
  for (int trial = 0; trial < 100; ++trial) {
    auto wrong = keygen(params, rng);
    EXPECT_EQ(code_of([&] { pk_decrypt(params, wrong.secret, ct); }), ErrorCode::kDecryptionFailed);
  }
  for (std::size_t i = 0; i < ct.bytes.size(); ++i) {
    auto bad = ct;
    bad.bytes[i] ^= 0x01;
    EXPECT_ANY_THROW(pk_decrypt(params, kp.secret, bad)) << i;
  }
}

INSTANTIATE_TEST_SUITE_P(Curves, GroupTest,
                         ::testing::Values(CurveCase{"secp256k1", &naive::secp256k1},
                                           CurveCase{"prime256v1", &naive::p256}),
                         [](const auto& info) { return std::string(info.param.id); });

TEST(Keygen, ThousandKeysAreDistinctAndValid) {
  auto params = setup_params("secp256k1");
  Rng rng(17);
  std::set<GroupPoint> seen;
  for (int i = 0; i < 1000; ++i) {
    auto kp = keygen(params, rng);
    EXPECT_FALSE(kp.secret.is_zero());
    EXPECT_EQ(base_mul(params, kp.secret), kp.public_key);
    EXPECT_TRUE(on_curve(params, kp.public_key));
    seen.insert(kp.public_key);
  }
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(Symmetric, GcmKnownAnswer) {
  // AES-128-GCM, zero key, zero IV, one zero block.
  SymmetricKey key{};
  Ciphertext ct{hex("000000000000000000000000"
                    "0388dace60b6a392f328c2b971b2fe78"
                    "ab6e47d42cec13bdf53a67b21257bddf")};
  EXPECT_EQ(sym_decrypt(key, ct), Bytes(16, 0));
}

TEST(Symmetric, RoundTripAcrossSizes) {
  Rng rng(18);
  auto key = random_symmetric_key(rng);
  for (std::size_t len : {0, 1, 15, 16, 17, 4096, 100000}) {
    auto msg = rng.bytes(len);
    auto ct = sym_encrypt(key, msg, rng);
    EXPECT_EQ(ct.bytes.size(), len + kNonceSize + kTagSize);
    EXPECT_EQ(sym_decrypt(key, ct), msg);
  }
}

TEST(Symmetric, FreshNonceEachTime) {
  Rng rng(19);
  auto key = random_symmetric_key(rng);
  auto msg = to_bytes("same body");
  EXPECT_NE(sym_encrypt(key, msg, rng), sym_encrypt(key, msg, rng));
}

TEST(Symmetric, EveryByteFlipAndWrongKeyFail) {
  Rng rng(20);
  auto key = random_symmetric_key(rng);
  auto ct = sym_encrypt(key, rng.bytes(64), rng);
  for (std::size_t i = 0; i < ct.bytes.size(); ++i) {
    auto bad = ct;
    bad.bytes[i] ^= 0x01;
    EXPECT_EQ(code_of([&] { sym_decrypt(key, bad); }), ErrorCode::kDecryptionFailed) << i;
  }
  for (int trial = 0; trial < 100; ++trial) {
    auto wrong = random_symmetric_key(rng);
    EXPECT_EQ(code_of([&] { sym_decrypt(wrong, ct); }), ErrorCode::kDecryptionFailed);
  }
  EXPECT_EQ(code_of([&] { sym_decrypt(key, Ciphertext{Bytes(10, 0)}); }),
            ErrorCode::kDecryptionFailed);
}

TEST(Symmetric, AadIsBound) {
  Rng rng(21);
  auto key = random_symmetric_key(rng);
  auto ct = sym_encrypt(key, to_bytes("x"), rng, to_bytes("aad-1"));
  EXPECT_EQ(sym_decrypt(key, ct, to_bytes("aad-1")), to_bytes("x"));
  EXPECT_EQ(code_of([&] { sym_decrypt(key, ct, to_bytes("aad-2")); }),
            ErrorCode::kDecryptionFailed);
}

TEST(Symmetric, KeyLengthChecked) {
  EXPECT_EQ(code_of([] { SymmetricKey::from(Bytes(15, 0)); }), ErrorCode::kInvalidKeyLength);
  EXPECT_NO_THROW(SymmetricKey::from(Bytes(16, 0)));
}

TEST(XorMask, InvolutionAndTruncation) {
  Rng rng(22);
  Digest pad;
  rng.fill(pad.bytes);
  for (std::size_t len : {0, 1, 16, 32}) {
    auto v = rng.bytes(len);
    auto masked = xor_mask(v, pad);
    ASSERT_EQ(masked.size(), len);
    for (std::size_t i = 0; i < len; ++i) EXPECT_EQ(masked[i], v[i] ^ pad.bytes[i]);
    EXPECT_EQ(xor_mask(masked, pad), v);
  }
  EXPECT_EQ(code_of([&] { xor_mask(Bytes(33, 1), pad); }), ErrorCode::kPadTooShort);
}

TEST(Rng, SeededStreamsAreReproducible) {
  Rng a(99), b(99), c(100);
  auto x = a.bytes(64);
  EXPECT_EQ(x, b.bytes(64));
  EXPECT_NE(x, c.bytes(64));
  auto fa = Rng(5).fork("doctor-1").bytes(32);
  EXPECT_EQ(fa, Rng(5).fork("doctor-1").bytes(32));
  EXPECT_NE(fa, Rng(5).fork("doctor-2").bytes(32));
}

TEST(Rng, UniformStaysInBound) {
  Rng rng(23);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    auto v = rng.uniform(7);
    ASSERT_LT(v, 7u);
    ++hits[v];
  }
  for (int h : hits) EXPECT_GT(h, 800);
}
