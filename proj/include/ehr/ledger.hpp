#pragma once

// In-process Ethereum-shaped ledger: accounts, signed transactions, and a
// hash-chained sequence of blocks sealed by a single authority.
//
// Canonical transaction encoding (all integers big-endian):
//   u64 nonce | u64 gas_price | u64 gas_limit
//   u8 recipient_flag (0 = broadcast, 1 = addressed) [ 20-byte address ]
//   u64 value | u32 payload_len | payload | 33-byte sender public key
//   ---- signed prefix ends here ----
//   u32 signature_len | signature
// TxId = h2_hash(full encoding).
//
// Block hash = h2_hash(u64 height | prev_hash(32) | u64 timestamp |
//                      u32 tx_count | tx_id(32) * tx_count).
// The genesis block (height 0) has prev_hash = 32 zero bytes and no
// transactions.

#include <array>
#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "ehr/bytes.hpp"
#include "ehr/crypto.hpp"

namespace ehr::ledger {

inline constexpr std::size_t kAddressSize = 20;

struct Address {
  std::array<std::uint8_t, kAddressSize> bytes{};

  ByteView view() const { return ByteView(bytes); }
  static Address from(ByteView b);
  auto operator<=>(const Address&) const = default;
};

/// First 20 bytes of h2_hash(compressed public key).
Address address_of(const crypto::SystemParams& params, const crypto::GroupPoint& pk);

using TxId = crypto::Digest;

struct Transaction {
  std::uint64_t nonce = 0;
  std::uint64_t gas_price = 0;
  std::uint64_t gas_limit = 0;
  std::optional<Address> recipient;  // nullopt = broadcast
  std::uint64_t value = 0;
  Bytes payload;
  crypto::GroupPoint sender_pub;
  crypto::Signature signature;

  Bytes signing_bytes() const;
  Bytes encode() const;
  static Transaction decode(const crypto::SystemParams& params, ByteView bytes);
  bool operator==(const Transaction&) const = default;
};

TxId tx_id_of(const crypto::SystemParams& params, const Transaction& tx);

struct Block {
  std::uint64_t height = 0;
  crypto::Digest prev_hash;
  std::uint64_t timestamp = 0;
  std::vector<TxId> tx_ids;
  crypto::Digest block_hash;

  Bytes header_bytes() const;
  bool operator==(const Block&) const = default;
};

crypto::Digest compute_block_hash(const crypto::SystemParams& params, const Block& block);

enum class FaultKind {
  kBadHeight,
  kBrokenLink,
  kBadBlockHash,
  kMissingTransaction,
  kMalformedTransaction,
  kTxIdMismatch,
  kBadSignature,
  kNonceSequence,
};

std::string_view to_string(FaultKind kind);

struct ChainFault {
  std::uint64_t height = 0;
  std::optional<std::size_t> tx_index;
  FaultKind kind{};
  std::string detail;
};

struct ChainReport {
  bool ok = true;
  std::optional<ChainFault> fault;  // first fault in chain order
  explicit operator bool() const { return ok; }
};

struct LedgerConfig {
  std::uint64_t gas_price = 1;
  std::uint64_t gas_limit = 100000;
  /// Simulated confirmation delay applied by confirm().
  std::chrono::milliseconds seal_latency{0};
};

/// A sealed transaction as stored: the raw canonical bytes are the source of
/// truth; `decoded` is empty when they no longer parse.
struct StoredTx {
  TxId id;
  Bytes raw;
  std::optional<Transaction> decoded;
};

class Ledger {
 public:
  explicit Ledger(crypto::SystemParams params, LedgerConfig config = {});

  const crypto::SystemParams& params() const { return params_; }
  const LedgerConfig& config() const { return config_; }

  /// Registers the account for pk. Idempotent.
  Address create_account(const crypto::GroupPoint& pk);
  bool has_account(const Address& address) const;
  /// Nonce the next transaction from this account must carry (starts at 0).
  std::uint64_t next_nonce(const Address& address) const;

  /// Validates signature, account, and nonce, then queues the transaction.
  /// Errors: kBadSignature, kUnknownAccount, kNonceReplay, kNonceGap.
  TxId submit_transaction(const Transaction& tx);

  /// Seals every pending transaction, in arrival order, into a new block.
  Block seal_block(std::uint64_t now);

  /// Ensures id is in a sealed block, sealing the mempool if it is still
  /// pending. Applies the configured seal latency when a seal happens.
  void confirm(const TxId& id, std::uint64_t now);

  /// Throws Error(kUnknownTransaction) unless id is sealed.
  Transaction get_transaction(const TxId& id) const;
  bool is_sealed(const TxId& id) const;
  std::size_t pending_count() const;

  std::uint64_t height() const;  // number of blocks including genesis
  Block block_at(std::uint64_t height) const;
  std::vector<Block> blocks() const;
  /// Every sealed transaction in chain order (decoded ones only).
  std::vector<std::pair<TxId, Transaction>> sealed_transactions() const;

  /// Whole-chain verification, parallel over blocks.
  ChainReport verify_chain() const;
  /// Single-threaded reference for verify_chain(); same result on every chain.
  ChainReport verify_chain_serial() const;

  /// Line-delimited export:
  ///   ehr-chain v1 <params-hex>
  ///   block <height> <timestamp> <prev-hex> <hash-hex> <tx-count>
  ///   tx <txid-hex> <raw-hex>
  void export_chain(std::ostream& out) const;
  /// Loads without validating; run verify_chain() on the result. Throws
  /// Error(kMalformedEncoding) if the file structure itself is unreadable.
  static std::unique_ptr<Ledger> import_chain(std::istream& in, LedgerConfig config = {});

 private:
  struct Location {
    std::uint64_t height;
    std::size_t index;
  };

  ChainReport verify_blocks(bool parallel) const;
  void seal_locked(std::uint64_t now);

  crypto::SystemParams params_;
  LedgerConfig config_;

  mutable std::shared_mutex mutex_;
  std::map<Address, std::uint64_t> accounts_;  // address -> next nonce
  std::vector<Block> blocks_;
  std::vector<std::vector<StoredTx>> block_txs_;
  std::map<TxId, Location> index_;
  std::vector<StoredTx> pending_;
  std::map<TxId, std::size_t> pending_index_;
};

/// Signs and submits a transaction from `keys`, using the account's next
/// nonce and the ledger's default gas settings.
TxId send_transaction(Ledger& ledger, const crypto::KeyPair& keys,
                      std::optional<Address> recipient, Bytes payload, Rng& rng);

/// Builds and signs without submitting.
Transaction make_transaction(const crypto::SystemParams& params, const crypto::KeyPair& keys,
                             std::uint64_t nonce, std::uint64_t gas_price,
                             std::uint64_t gas_limit, std::optional<Address> recipient,
                             Bytes payload, Rng& rng);

}  // namespace ehr::ledger
