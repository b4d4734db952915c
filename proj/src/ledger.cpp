#include "ehr/ledger.hpp"

#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "ehr/error.hpp"

namespace ehr::ledger {

using crypto::Digest;

Address Address::from(ByteView b) {
  if (b.size() != kAddressSize) {
    throw Error(ErrorCode::kMalformedEncoding, "address must be 20 bytes");
  }
  Address a;
  std::copy(b.begin(), b.end(), a.bytes.begin());
  return a;
}

Address address_of(const crypto::SystemParams& params, const crypto::GroupPoint& pk) {
  auto d = crypto::h2_hash(params, view(pk.compressed()));
  return Address::from(ByteView(d.bytes.data(), kAddressSize));
}

Bytes Transaction::signing_bytes() const {
  ByteWriter w;
  w.u64(nonce).u64(gas_price).u64(gas_limit);
  if (recipient) {
    w.u8(1).raw(recipient->view());
  } else {
    w.u8(0);
  }
  w.u64(value).blob32(payload).raw(sender_pub.encode());
  return std::move(w).take();
}

Bytes Transaction::encode() const {
  ByteWriter w;
  w.raw(signing_bytes()).blob32(signature.bytes);
  return std::move(w).take();
}

Transaction Transaction::decode(const crypto::SystemParams& params, ByteView bytes) {
  ByteReader r(bytes);
  Transaction tx;
  tx.nonce = r.u64();
  tx.gas_price = r.u64();
  tx.gas_limit = r.u64();
  switch (r.u8()) {
    case 0: break;
    case 1: tx.recipient = Address{r.fixed<kAddressSize>()}; break;
    default: throw Error(ErrorCode::kMalformedEncoding, "bad recipient flag");
  }
  tx.value = r.u64();
  tx.payload = r.blob32();
  tx.sender_pub = crypto::decode_point(params, r.raw(crypto::kPointSize));
  tx.signature.bytes = r.blob32();
  r.expect_end();
  return tx;
}

TxId tx_id_of(const crypto::SystemParams& params, const Transaction& tx) {
  return crypto::h2_hash(params, tx.encode());
}

Bytes Block::header_bytes() const {
  ByteWriter w;
  w.u64(height).raw(prev_hash.view()).u64(timestamp).u32(static_cast<std::uint32_t>(tx_ids.size()));
  for (const auto& id : tx_ids) w.raw(id.view());
  return std::move(w).take();
}

Digest compute_block_hash(const crypto::SystemParams& params, const Block& block) {
  return crypto::h2_hash(params, block.header_bytes());
}

std::string_view to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::kBadHeight: return "bad-height";
    case FaultKind::kBrokenLink: return "broken-link";
    case FaultKind::kBadBlockHash: return "bad-block-hash";
    case FaultKind::kMissingTransaction: return "missing-transaction";
    case FaultKind::kMalformedTransaction: return "malformed-transaction";
    case FaultKind::kTxIdMismatch: return "txid-mismatch";
    case FaultKind::kBadSignature: return "bad-signature";
    case FaultKind::kNonceSequence: return "nonce-sequence";
  }
  return "unknown";
}

Ledger::Ledger(crypto::SystemParams params, LedgerConfig config)
    : params_(std::move(params)), config_(config) {
  Block genesis;
  genesis.block_hash = compute_block_hash(params_, genesis);
  blocks_.push_back(genesis);
  block_txs_.emplace_back();
}

Address Ledger::create_account(const crypto::GroupPoint& pk) {
  auto addr = address_of(params_, pk);
  std::unique_lock lock(mutex_);
  accounts_.try_emplace(addr, 0);
  return addr;
}

bool Ledger::has_account(const Address& address) const {
  std::shared_lock lock(mutex_);
  return accounts_.contains(address);
}

std::uint64_t Ledger::next_nonce(const Address& address) const {
  std::shared_lock lock(mutex_);
  auto it = accounts_.find(address);
  if (it == accounts_.end()) throw Error(ErrorCode::kUnknownAccount, "no such account");
  return it->second;
}

TxId Ledger::submit_transaction(const Transaction& tx) {
  if (tx.sender_pub.is_identity() ||
      !crypto::verify(params_, tx.sender_pub, tx.signing_bytes(), tx.signature)) {
    throw Error(ErrorCode::kBadSignature, "transaction signature does not verify");
  }
  auto sender = address_of(params_, tx.sender_pub);
  StoredTx stored;
  stored.raw = tx.encode();
  stored.id = crypto::h2_hash(params_, stored.raw);
  stored.decoded = tx;

  std::unique_lock lock(mutex_);
  auto acct = accounts_.find(sender);
  if (acct == accounts_.end()) {
    throw Error(ErrorCode::kUnknownAccount, "sender " + to_hex(sender.view()));
  }
  if (tx.nonce < acct->second) {
    throw Error(ErrorCode::kNonceReplay, "nonce " + std::to_string(tx.nonce) +
                                             " already used (next " +
                                             std::to_string(acct->second) + ")");
  }
  if (tx.nonce > acct->second) {
    throw Error(ErrorCode::kNonceGap, "nonce " + std::to_string(tx.nonce) + " skips ahead of " +
                                          std::to_string(acct->second));
  }
  ++acct->second;
  auto id = stored.id;
  pending_index_.emplace(id, pending_.size());
  pending_.push_back(std::move(stored));
  return id;
}

void Ledger::seal_locked(std::uint64_t now) {
  Block b;
  b.height = blocks_.size();
  b.prev_hash = blocks_.back().block_hash;
  b.timestamp = now;
  for (const auto& tx : pending_) b.tx_ids.push_back(tx.id);
  b.block_hash = compute_block_hash(params_, b);
  for (std::size_t i = 0; i < pending_.size(); ++i) {
    index_.emplace(pending_[i].id, Location{b.height, i});
  }
  blocks_.push_back(std::move(b));
  block_txs_.push_back(std::move(pending_));
  pending_.clear();
  pending_index_.clear();
}

Block Ledger::seal_block(std::uint64_t now) {
  std::unique_lock lock(mutex_);
  seal_locked(now);
  return blocks_.back();
}

void Ledger::confirm(const TxId& id, std::uint64_t now) {
  {
    std::shared_lock lock(mutex_);
    if (index_.contains(id)) return;
    if (!pending_index_.contains(id)) {
      throw Error(ErrorCode::kUnknownTransaction, to_hex(id.view()));
    }
  }
  if (config_.seal_latency.count() > 0) std::this_thread::sleep_for(config_.seal_latency);
  std::unique_lock lock(mutex_);
  // Another submitter may have sealed in the meantime.
  if (!index_.contains(id)) seal_locked(now);
}

Transaction Ledger::get_transaction(const TxId& id) const {
  std::shared_lock lock(mutex_);
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw Error(ErrorCode::kUnknownTransaction, to_hex(id.view()));
  }
  const auto& stored = block_txs_[it->second.height][it->second.index];
  if (!stored.decoded) {
    throw Error(ErrorCode::kMalformedEncoding, "stored transaction no longer parses");
  }
  return *stored.decoded;
}

bool Ledger::is_sealed(const TxId& id) const {
  std::shared_lock lock(mutex_);
  return index_.contains(id);
}

std::size_t Ledger::pending_count() const {
  std::shared_lock lock(mutex_);
  return pending_.size();
}

std::uint64_t Ledger::height() const {
  std::shared_lock lock(mutex_);
  return blocks_.size();
}

Block Ledger::block_at(std::uint64_t height) const {
  std::shared_lock lock(mutex_);
  if (height >= blocks_.size()) {
    throw Error(ErrorCode::kUnknownTransaction, "no block at height " + std::to_string(height));
  }
  return blocks_[height];
}

std::vector<Block> Ledger::blocks() const {
  std::shared_lock lock(mutex_);
  return blocks_;
}

std::vector<std::pair<TxId, Transaction>> Ledger::sealed_transactions() const {
  std::shared_lock lock(mutex_);
  std::vector<std::pair<TxId, Transaction>> out;
  for (const auto& txs : block_txs_) {
    for (const auto& t : txs) {
      if (t.decoded) out.emplace_back(t.id, *t.decoded);
    }
  }
  return out;
}

ChainReport Ledger::verify_chain() const { return verify_blocks(true); }
ChainReport Ledger::verify_chain_serial() const { return verify_blocks(false); }

void Ledger::export_chain(std::ostream& out) const {
  std::shared_lock lock(mutex_);
  out << "ehr-chain v1 " << to_hex(params_.encode()) << '\n';
  for (std::size_t h = 0; h < blocks_.size(); ++h) {
    const auto& b = blocks_[h];
    out << "block " << b.height << ' ' << b.timestamp << ' ' << to_hex(b.prev_hash.view())
        << ' ' << to_hex(b.block_hash.view()) << ' ' << b.tx_ids.size() << '\n';
    for (std::size_t i = 0; i < b.tx_ids.size(); ++i) {
      const auto* raw = i < block_txs_[h].size() ? &block_txs_[h][i].raw : nullptr;
      out << "tx " << to_hex(b.tx_ids[i].view()) << ' ' << (raw ? to_hex(*raw) : "") << '\n';
    }
  }
}

std::unique_ptr<Ledger> Ledger::import_chain(std::istream& in, LedgerConfig config) {
  auto bad = [](const std::string& why) {
    return Error(ErrorCode::kMalformedEncoding, "chain import: " + why);
  };
  std::string line;
  if (!std::getline(in, line)) throw bad("empty input");
  std::istringstream head(line);
  std::string magic, version, params_hex;
  head >> magic >> version >> params_hex;
  if (magic != "ehr-chain" || version != "v1") throw bad("bad header");
  auto params = crypto::SystemParams::decode(from_hex(params_hex));

  auto ledger = std::make_unique<Ledger>(params, config);
  ledger->blocks_.clear();
  ledger->block_txs_.clear();

  std::size_t expected_txs = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "block") {
      if (expected_txs != 0) throw bad("block ended early");
      Block b;
      std::string prev, hash;
      ls >> b.height >> b.timestamp >> prev >> hash >> expected_txs;
      if (!ls) throw bad("bad block line");
      b.prev_hash = Digest::from(from_hex(prev));
      b.block_hash = Digest::from(from_hex(hash));
      ledger->blocks_.push_back(std::move(b));
      ledger->block_txs_.emplace_back();
    } else if (kind == "tx") {
      if (ledger->blocks_.empty() || expected_txs == 0) throw bad("tx outside a block");
      std::string id_hex, raw_hex;
      ls >> id_hex >> raw_hex;
      StoredTx st;
      st.id = Digest::from(from_hex(id_hex));
      st.raw = from_hex(raw_hex);
      try {
        st.decoded = Transaction::decode(params, st.raw);
      } catch (const Error&) {
        st.decoded.reset();
      }
      auto& block = ledger->blocks_.back();
      ledger->index_.emplace(st.id, Location{block.height, block.tx_ids.size()});
      block.tx_ids.push_back(st.id);
      ledger->block_txs_.back().push_back(std::move(st));
      --expected_txs;
    } else {
      throw bad("unknown record '" + kind + "'");
    }
  }
  if (expected_txs != 0) throw bad("truncated block");
  if (ledger->blocks_.empty()) throw bad("no blocks");

  // Rebuild account nonces from the imported history.
  for (const auto& txs : ledger->block_txs_) {
    for (const auto& t : txs) {
      if (!t.decoded) continue;
      auto addr = address_of(params, t.decoded->sender_pub);
      auto& next = ledger->accounts_[addr];
      next = std::max(next, t.decoded->nonce + 1);
    }
  }
  return ledger;
}

Transaction make_transaction(const crypto::SystemParams& params, const crypto::KeyPair& keys,
                             std::uint64_t nonce, std::uint64_t gas_price,
                             std::uint64_t gas_limit, std::optional<Address> recipient,
                             Bytes payload, Rng& rng) {
  Transaction tx;
  tx.nonce = nonce;
  tx.gas_price = gas_price;
  tx.gas_limit = gas_limit;
  tx.recipient = recipient;
  tx.value = 0;
  tx.payload = std::move(payload);
  tx.sender_pub = keys.public_key;
  tx.signature = crypto::sign(params, keys.secret, tx.signing_bytes(), rng);
  return tx;
}

TxId send_transaction(Ledger& ledger, const crypto::KeyPair& keys,
                      std::optional<Address> recipient, Bytes payload, Rng& rng) {
  auto from = address_of(ledger.params(), keys.public_key);
  auto tx = make_transaction(ledger.params(), keys, ledger.next_nonce(from),
                             ledger.config().gas_price, ledger.config().gas_limit, recipient,
                             std::move(payload), rng);
  return ledger.submit_transaction(tx);
}

}  // namespace ehr::ledger
