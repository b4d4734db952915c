#pragma once

// Hospital server C1: holds CHR and masked index entries keyed by X, runs the
// release handshake, and applies retention deletion.
//
// Persistence layout (save/load):
//   <dir>/entries/<x-hex>.rec   one record per entry:
//       X(32) | u32 len | Z | u32 len | K | u32 len | CHR | eh1(32)
//       | u64 stored_at | u8 has_expiry | u64 expires_at | u8 deleted
//   <dir>/audit.log             one line per access request, append-only:
//       <seq> <time> <subject-hex> <x-hex> <outcome>
//
// The store never sees Y, k_t, the record key, or any plaintext.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <vector>

#include "ehr/ledger.hpp"
#include "ehr/messages.hpp"
#include "ehr/registry.hpp"

namespace ehr::hospital {

struct StoredEntry {
  crypto::Digest x_index;
  exchange::MaskedIndexEntry entry;
  crypto::Ciphertext chr;
  crypto::Digest anchor_digest;  // h2(CHR), kept for the tombstone after CHR is erased
  std::uint64_t stored_at = 0;
  std::optional<std::uint64_t> expires_at;
  bool deleted = false;
};

struct AuditRecord {
  std::uint64_t seq = 0;
  std::uint64_t time = 0;
  crypto::Digest requester;  // certificate subject pseudonym
  crypto::Digest x_index;
  std::string outcome;       // "released" or an error code name

  std::string to_line() const;
  static AuditRecord from_line(const std::string& line);
  bool operator==(const AuditRecord&) const = default;
};

struct StoreConfig {
  /// Number of access requests processed at once. One models a single
  /// server worker; requests beyond it queue.
  std::ptrdiff_t release_workers = 1;
};

class HospitalStore {
 public:
  HospitalStore(crypto::SystemParams params, registry::ParticipantIdentity hospital,
                ledger::Ledger& ledger, Rng rng, StoreConfig config = {});
  ~HospitalStore();

  const registry::ParticipantIdentity& identity() const { return hospital_; }

  /// Throws Error(kDuplicateIndex) if X is already present.
  void store_record(const exchange::MaskedIndexEntry& entry, crypto::Ciphertext chr,
                    std::uint64_t now, std::optional<std::uint64_t> retention = std::nullopt);

  /// Certificate check, then signature over W, then lookup. Every request is
  /// audited. Errors, in check order: kBadCertificate, kBadSignature,
  /// kUnknownIndex, kEntryDeleted.
  exchange::ReleasedRecord handle_access_request(const exchange::AccessRequest& request,
                                                 const crypto::GroupPoint& ha_pk,
                                                 std::uint64_t now);

  /// Marks entries with expires_at <= now as deleted, erases their CHR and
  /// anchors a tombstone for each. Returns how many were deleted.
  std::size_t delete_expired(std::uint64_t now);

  std::optional<StoredEntry> inspect(const crypto::Digest& x_index) const;
  std::size_t size() const;
  std::vector<AuditRecord> audit_log() const;

  void save(const std::filesystem::path& dir) const;
  /// Restores entries and the audit log saved by save().
  void load(const std::filesystem::path& dir);

 private:
  void audit(std::uint64_t now, const crypto::Digest& requester, const crypto::Digest& x,
             std::string outcome);

  crypto::SystemParams params_;
  registry::ParticipantIdentity hospital_;
  ledger::Ledger& ledger_;

  mutable std::shared_mutex entries_mutex_;
  std::map<crypto::Digest, StoredEntry> entries_;

  mutable std::mutex audit_mutex_;
  std::vector<AuditRecord> audit_;

  std::mutex rng_mutex_;
  Rng rng_;

  std::unique_ptr<std::counting_semaphore<>> workers_;
};

}  // namespace ehr::hospital
