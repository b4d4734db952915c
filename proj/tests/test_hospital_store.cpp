#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "ehr/error.hpp"
#include "ehr/world.hpp"

using namespace ehr;
using namespace ehr::exchange;
using ehr::harness::RecordRef;
using ehr::harness::World;
using ehr::harness::WorldConfig;

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

struct Fixture {
  World w;
  RecordRef rec;
  AccessRequest req;
  Bytes body;

  explicit Fixture(std::optional<std::uint64_t> retention = std::nullopt)
      : w([] {
          WorldConfig c;
          c.seed = 11;
          c.n_doctors = 3;
          return c;
        }()),
        body(to_bytes("chest x-ray report")) {
    rec = w.create_record(0, 0, body, "imaging", retention);
    auto [grant, id] = w.grant(rec, 1, w.patient_rng(0), w.tick());
    auto pass = w.doctor(1).accept_grant(grant);
    req = w.doctor(1).build_access_request(pass, w.doctor_rng(1));
  }

  hospital::HospitalStore& store() { return w.store(0); }
  ReleasedRecord release(const AccessRequest& r) {
    return store().handle_access_request(r, w.ha_public_key(), w.now());
  }
};

Bytes read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

class TempDir {
 public:
  TempDir() {
    path_ = std::filesystem::temp_directory_path() /
            ("ehr-store-test-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace

TEST(HospitalStore, StoredTripleIsReleasedVerbatim) {
  Fixture f;
  auto stored = f.store().inspect(f.rec.handle);
  ASSERT_TRUE(stored);
  EXPECT_EQ(stored->x_index, stored->entry.x_index);
  EXPECT_EQ(stored->chr, f.rec.anchored.encrypted.ciphertext);
  auto out = f.release(f.req);
  EXPECT_EQ(out.z_masked_txid, f.rec.entry.z_masked_txid);
  EXPECT_EQ(out.k_masked_key, f.rec.entry.k_masked_key);
  EXPECT_EQ(out.chr, f.rec.anchored.encrypted.ciphertext);
  EXPECT_EQ(ReleasedRecord::decode(out.encode()).chr, out.chr);
  EXPECT_EQ(f.w.doctor(1).recover_record(f.req.w, out, f.w.ledger()), f.body);
}

TEST(HospitalStore, DuplicateIndexRejected) {
  Fixture f;
  EXPECT_EQ(code_of([&] {
              f.store().store_record(f.rec.entry, f.rec.anchored.encrypted.ciphertext, f.w.now());
            }),
            ErrorCode::kDuplicateIndex);
  EXPECT_EQ(f.store().size(), 1u);
}

TEST(HospitalStore, DenialsAreDistinctAndAudited) {
  Fixture f;
  std::vector<ErrorCode> codes;

  auto late = f.w.now() + harness::kCertificateLifetime + 10;
  codes.push_back(code_of([&] { f.store().handle_access_request(f.req, f.w.ha_public_key(), late); }));

  auto bad_sig = f.req;
  bad_sig.signature = crypto::sign(f.w.params(), f.w.doctor(2).identity().enc_keypair.secret,
                                   f.req.w.view(), f.w.rng());
  codes.push_back(code_of([&] { f.release(bad_sig); }));

  auto unknown = f.req;
  unknown.w.bytes[0] ^= 1;
  unknown.signature =
      crypto::sign(f.w.params(), f.w.doctor(1).identity().enc_keypair.secret, unknown.w.view(),
                   f.w.rng());
  codes.push_back(code_of([&] { f.release(unknown); }));

  EXPECT_EQ(codes, (std::vector<ErrorCode>{ErrorCode::kBadCertificate, ErrorCode::kBadSignature,
                                           ErrorCode::kUnknownIndex}));

  auto log = f.store().audit_log();
  ASSERT_EQ(log.size(), 3u);
  EXPECT_EQ(log[0].outcome, "bad-certificate");
  EXPECT_EQ(log[1].outcome, "bad-signature");
  EXPECT_EQ(log[2].outcome, "unknown-index");
  for (std::size_t i = 0; i < log.size(); ++i) EXPECT_EQ(log[i].seq, i);
}

TEST(HospitalStore, EveryRequestByteMutationIsGated) {
  Fixture f;
  auto enc = f.req.encode();
  std::size_t released = 0;
  for (std::size_t i = 0; i < enc.size(); ++i) {
    auto bad = enc;
    bad[i] ^= 0x01;
    AccessRequest r;
    try {
      r = AccessRequest::decode(f.w.params(), bad);
    } catch (const Error&) {
      continue;
    }
    try {
      f.release(r);
      ++released;
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == ErrorCode::kBadCertificate || e.code() == ErrorCode::kBadSignature ||
                  e.code() == ErrorCode::kUnknownIndex)
          << i << " " << e.what();
    }
  }
  EXPECT_EQ(released, 0u);
  EXPECT_NO_THROW(f.release(f.req));
}

TEST(HospitalStore, RetentionDeletionAndTombstone) {
  Fixture f(0);
  auto anchor_id = f.rec.anchored.tx_id;
  auto eh1 = f.rec.anchored.encrypted.digest;
  auto h0 = f.w.ledger().height();

  EXPECT_EQ(code_of([&] { f.release(f.req); }), ErrorCode::kEntryDeleted);
  EXPECT_EQ(f.store().delete_expired(f.w.now()), 1u);
  EXPECT_EQ(f.store().delete_expired(f.w.now()), 0u);

  auto stored = f.store().inspect(f.rec.handle);
  ASSERT_TRUE(stored);
  EXPECT_TRUE(stored->deleted);
  EXPECT_TRUE(stored->chr.bytes.empty());
  EXPECT_EQ(code_of([&] { f.release(f.req); }), ErrorCode::kEntryDeleted);

  // Chain scan: tombstone present after the anchor, anchor untouched.
  EXPECT_GT(f.w.ledger().height(), h0);
  bool anchor_seen = false, tomb_seen = false;
  for (const auto& [id, tx] : f.w.ledger().sealed_transactions()) {
    if (id == anchor_id) {
      anchor_seen = true;
      EXPECT_EQ(AnchorRecord::decode(tx.payload).digest, eh1);
    }
    if (payload_kind(tx.payload) == PayloadKind::kTombstone) {
      EXPECT_TRUE(anchor_seen);
      EXPECT_EQ(Tombstone::decode(tx.payload).digest, eh1);
      EXPECT_EQ(tx.sender_pub, f.store().identity().enc_keypair.public_key);
      tomb_seen = true;
    }
  }
  EXPECT_TRUE(anchor_seen);
  EXPECT_TRUE(tomb_seen);
  EXPECT_TRUE(f.w.ledger().verify_chain());
}

TEST(HospitalStore, NoRetentionMeansNoDeletion) {
  Fixture f;
  EXPECT_EQ(f.store().delete_expired(f.w.now() + 100ull * 365 * 24 * 3600), 0u);
  EXPECT_NO_THROW(f.release(f.req));
}

TEST(HospitalStore, ExpiryHonoredBeforeSweep) {
  Fixture f(100);
  EXPECT_NO_THROW(f.release(f.req));
  auto req2 = f.w.doctor(1).build_access_request(*f.w.patient(0).pass_for(f.rec.handle),
                                                 f.w.doctor_rng(1));
  EXPECT_EQ(code_of([&] {
              f.store().handle_access_request(req2, f.w.ha_public_key(), f.w.now() + 100);
            }),
            ErrorCode::kEntryDeleted);
}

TEST(HospitalStore, SaveLoadRoundTrip) {
  Fixture f(50);
  f.release(f.req);
  TempDir dir;
  f.store().save(dir.path());

  hospital::HospitalStore copy(f.w.params(), f.store().identity(), f.w.ledger(), Rng(1));
  copy.load(dir.path());
  EXPECT_EQ(copy.size(), 1u);
  auto a = f.store().inspect(f.rec.handle), b = copy.inspect(f.rec.handle);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->entry, b->entry);
  EXPECT_EQ(a->chr, b->chr);
  EXPECT_EQ(a->anchor_digest, b->anchor_digest);
  EXPECT_EQ(a->stored_at, b->stored_at);
  EXPECT_EQ(a->expires_at, b->expires_at);
  EXPECT_EQ(copy.audit_log(), f.store().audit_log());

  // The record file follows the documented layout.
  auto raw = read_file(dir.path() / "entries" / (to_hex(f.rec.handle.view()) + ".rec"));
  ByteReader r(raw);
  EXPECT_EQ(r.fixed<32>(), f.rec.handle.bytes);
  EXPECT_EQ(r.blob32(), f.rec.entry.z_masked_txid);
  EXPECT_EQ(r.blob32(), f.rec.entry.k_masked_key);
  EXPECT_EQ(r.blob32(), f.rec.anchored.encrypted.ciphertext.bytes);
}

TEST(HospitalStore, AuditLogReplaysReleases) {
  Fixture f;
  f.release(f.req);
  auto bad = f.req;
  bad.signature.bytes[5] ^= 1;
  EXPECT_ANY_THROW(f.release(bad));
  f.release(f.req);

  TempDir dir;
  f.store().save(dir.path());
  std::ifstream in(dir.path() / "audit.log");
  std::vector<hospital::AuditRecord> replayed;
  for (std::string line; std::getline(in, line);) {
    replayed.push_back(hospital::AuditRecord::from_line(line));
  }
  ASSERT_EQ(replayed.size(), 3u);
  std::size_t releases = 0;
  for (const auto& r : replayed) {
    releases += r.outcome == "released";
    EXPECT_EQ(r.x_index, f.req.w);
    EXPECT_EQ(r.requester, f.req.cert.subject);
  }
  EXPECT_EQ(releases, 2u);
}

TEST(HospitalStore, PersistedStateHoldsNoSecrets) {
  Fixture f;
  f.release(f.req);
  TempDir dir;
  f.store().save(dir.path());
  auto pass = *f.w.patient(0).pass_for(f.rec.handle);
  auto pads = derive_index_pads(f.w.params(), pass.hospital_id, pass.record_time, pass.k_t);
  std::vector<Bytes> secrets{Bytes(pass.k_t.begin(), pass.k_t.end()),
                             Bytes(pads.y.bytes.begin(), pads.y.bytes.end()),
                             Bytes(f.rec.anchored.key.bytes.begin(), f.rec.anchored.key.bytes.end()),
                             f.body};
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir.path())) {
    if (!entry.is_regular_file()) continue;
    auto bytes = read_file(entry.path());
    for (const auto& s : secrets) {
      EXPECT_FALSE(contains(bytes, s)) << entry.path();
      EXPECT_FALSE(contains(bytes, to_bytes(to_hex(s)))) << entry.path();
    }
  }
}

TEST(HospitalStore, RejectsZeroWorkers) {
  auto params = crypto::setup_params("secp256k1");
  ledger::Ledger ledger(params);
  EXPECT_EQ(code_of([&] {
              hospital::HospitalStore s(params, {}, ledger, Rng(1), hospital::StoreConfig{0});
            }),
            ErrorCode::kInvalidConfig);
}
