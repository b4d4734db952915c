#include "ehr/hospital_store.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "ehr/error.hpp"

namespace ehr::hospital {

using crypto::Digest;

std::string AuditRecord::to_line() const {
  std::ostringstream out;
  out << seq << ' ' << time << ' ' << to_hex(requester.view()) << ' ' << to_hex(x_index.view())
      << ' ' << outcome;
  return out.str();
}

AuditRecord AuditRecord::from_line(const std::string& line) {
  std::istringstream in(line);
  AuditRecord r;
  std::string subject, x;
  in >> r.seq >> r.time >> subject >> x >> r.outcome;
  if (!in) throw Error(ErrorCode::kMalformedEncoding, "audit line: " + line);
  r.requester = Digest::from(from_hex(subject));
  r.x_index = Digest::from(from_hex(x));
  return r;
}

HospitalStore::HospitalStore(crypto::SystemParams params, registry::ParticipantIdentity hospital,
                             ledger::Ledger& ledger, Rng rng, StoreConfig config)
    : params_(std::move(params)),
      hospital_(std::move(hospital)),
      ledger_(ledger),
      rng_(std::move(rng)) {
  if (config.release_workers < 1) {
    throw Error(ErrorCode::kInvalidConfig, "release_workers must be at least 1");
  }
  workers_ = std::make_unique<std::counting_semaphore<>>(config.release_workers);
}

HospitalStore::~HospitalStore() = default;

void HospitalStore::store_record(const exchange::MaskedIndexEntry& entry, crypto::Ciphertext chr,
                                 std::uint64_t now, std::optional<std::uint64_t> retention) {
  StoredEntry stored;
  stored.x_index = entry.x_index;
  stored.entry = entry;
  stored.anchor_digest = crypto::h2_hash(params_, chr.bytes);
  stored.chr = std::move(chr);
  stored.stored_at = now;
  if (retention) stored.expires_at = now + *retention;

  std::unique_lock lock(entries_mutex_);
  if (entries_.contains(entry.x_index)) {
    throw Error(ErrorCode::kDuplicateIndex, to_hex(entry.x_index.view()));
  }
  entries_.emplace(entry.x_index, std::move(stored));
}

void HospitalStore::audit(std::uint64_t now, const Digest& requester, const Digest& x,
                          std::string outcome) {
  std::lock_guard lock(audit_mutex_);
  audit_.push_back(AuditRecord{audit_.size(), now, requester, x, std::move(outcome)});
}

exchange::ReleasedRecord HospitalStore::handle_access_request(
    const exchange::AccessRequest& request, const crypto::GroupPoint& ha_pk, std::uint64_t now) {
  struct WorkerSlot {
    std::counting_semaphore<>& sem;
    explicit WorkerSlot(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
    ~WorkerSlot() { sem.release(); }
  } slot(*workers_);

  const auto& requester = request.cert.subject;
  auto deny = [&](ErrorCode code, const std::string& detail) {
    audit(now, requester, request.w, std::string(to_string(code)));
    return Error(code, detail);
  };

  auto status = registry::check_certificate(params_, request.cert, ha_pk, now);
  if (status != registry::CertStatus::kValid) {
    throw deny(ErrorCode::kBadCertificate, std::string(registry::to_string(status)));
  }
  if (!crypto::verify(params_, request.cert.subject_pk_enc, request.w.view(), request.signature)) {
    throw deny(ErrorCode::kBadSignature, "signature over W does not verify under the certificate");
  }

  exchange::ReleasedRecord out;
  {
    std::shared_lock lock(entries_mutex_);
    auto it = entries_.find(request.w);
    if (it == entries_.end()) {
      lock.unlock();
      throw deny(ErrorCode::kUnknownIndex, to_hex(request.w.view()));
    }
    const auto& e = it->second;
    if (e.deleted || (e.expires_at && *e.expires_at <= now)) {
      lock.unlock();
      throw deny(ErrorCode::kEntryDeleted, to_hex(request.w.view()));
    }
    out.z_masked_txid = e.entry.z_masked_txid;
    out.k_masked_key = e.entry.k_masked_key;
    out.chr = e.chr;
  }
  audit(now, requester, request.w, "released");
  return out;
}

std::size_t HospitalStore::delete_expired(std::uint64_t now) {
  std::vector<Digest> revoked;
  {
    std::unique_lock lock(entries_mutex_);
    for (auto& [x, e] : entries_) {
      if (e.deleted || !e.expires_at || *e.expires_at > now) continue;
      e.deleted = true;
      Bytes().swap(e.chr.bytes);
      revoked.push_back(e.anchor_digest);
    }
  }
  std::lock_guard lock(rng_mutex_);
  for (const auto& digest : revoked) {
    auto id = ledger::send_transaction(ledger_, hospital_.enc_keypair, std::nullopt,
                                       exchange::Tombstone{digest}.encode(), rng_);
    ledger_.confirm(id, now);
  }
  return revoked.size();
}

std::optional<StoredEntry> HospitalStore::inspect(const Digest& x_index) const {
  std::shared_lock lock(entries_mutex_);
  auto it = entries_.find(x_index);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::size_t HospitalStore::size() const {
  std::shared_lock lock(entries_mutex_);
  return entries_.size();
}

std::vector<AuditRecord> HospitalStore::audit_log() const {
  std::lock_guard lock(audit_mutex_);
  return audit_;
}

void HospitalStore::save(const std::filesystem::path& dir) const {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "entries", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + (dir / "entries").string());

  {
    std::shared_lock lock(entries_mutex_);
    for (const auto& [x, e] : entries_) {
      ByteWriter w;
      w.raw(e.x_index.view())
          .blob32(e.entry.z_masked_txid)
          .blob32(e.entry.k_masked_key)
          .blob32(e.chr.bytes)
          .raw(e.anchor_digest.view())
          .u64(e.stored_at)
          .u8(e.expires_at ? 1 : 0)
          .u64(e.expires_at.value_or(0))
          .u8(e.deleted ? 1 : 0);
      auto path = dir / "entries" / (to_hex(x.view()) + ".rec");
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out.write(reinterpret_cast<const char*>(w.bytes().data()),
                static_cast<std::streamsize>(w.bytes().size()));
      if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    }
  }

  std::lock_guard lock(audit_mutex_);
  std::ofstream log(dir / "audit.log", std::ios::trunc);
  for (const auto& r : audit_) log << r.to_line() << '\n';
  if (!log) throw Error(ErrorCode::kIo, "cannot write audit log");
}

void HospitalStore::load(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::map<Digest, StoredEntry> loaded;
  if (fs::exists(dir / "entries")) {
    for (const auto& f : fs::directory_iterator(dir / "entries")) {
      if (f.path().extension() != ".rec") continue;
      std::ifstream in(f.path(), std::ios::binary);
      Bytes raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      ByteReader r(raw);
      StoredEntry e;
      e.x_index.bytes = r.fixed<crypto::kDigestSize>();
      e.entry.x_index = e.x_index;
      e.entry.z_masked_txid = r.blob32();
      e.entry.k_masked_key = r.blob32();
      e.chr.bytes = r.blob32();
      e.anchor_digest.bytes = r.fixed<crypto::kDigestSize>();
      e.stored_at = r.u64();
      bool has_expiry = r.u8() != 0;
      auto expiry = r.u64();
      if (has_expiry) e.expires_at = expiry;
      e.deleted = r.u8() != 0;
      r.expect_end();
      loaded.emplace(e.x_index, std::move(e));
    }
  }
  std::vector<AuditRecord> log;
  std::ifstream in(dir / "audit.log");
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) log.push_back(AuditRecord::from_line(line));
  }

  std::unique_lock lock(entries_mutex_);
  std::lock_guard alock(audit_mutex_);
  entries_ = std::move(loaded);
  audit_ = std::move(log);
}

}  // namespace ehr::hospital
