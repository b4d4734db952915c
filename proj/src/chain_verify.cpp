// Whole-chain verification. The parallel path splits header checks and
// transaction checks into two flat OpenMP loops; the serial path runs the
// same per-item kernels in order and is kept as the test reference.

#include <omp.h>

#include <map>
#include <mutex>

#include "ehr/ledger.hpp"

namespace ehr::ledger {

namespace {

using crypto::Digest;

std::optional<ChainFault> check_header(const crypto::SystemParams& params,
                                       const std::vector<Block>& blocks,
                                       const std::vector<std::vector<StoredTx>>& txs,
                                       std::size_t h) {
  const auto& b = blocks[h];
  if (b.height != h) {
    return ChainFault{h, std::nullopt, FaultKind::kBadHeight,
                      "stored height " + std::to_string(b.height)};
  }
  const Digest expected_prev = h == 0 ? Digest{} : blocks[h - 1].block_hash;
  if (b.prev_hash != expected_prev) {
    return ChainFault{h, std::nullopt, FaultKind::kBrokenLink, "prev_hash does not link"};
  }
  if (compute_block_hash(params, b) != b.block_hash) {
    return ChainFault{h, std::nullopt, FaultKind::kBadBlockHash, "block hash mismatch"};
  }
  if (txs[h].size() != b.tx_ids.size()) {
    return ChainFault{h, std::nullopt, FaultKind::kMissingTransaction,
                      "block lists " + std::to_string(b.tx_ids.size()) + " txs, " +
                          std::to_string(txs[h].size()) + " stored"};
  }
  return std::nullopt;
}

std::optional<ChainFault> check_tx(const crypto::SystemParams& params, const Block& b,
                                   const StoredTx& st, std::size_t i) {
  if (!st.decoded) {
    return ChainFault{b.height, i, FaultKind::kMalformedTransaction, "does not parse"};
  }
  if (crypto::h2_hash(params, st.raw) != b.tx_ids[i]) {
    return ChainFault{b.height, i, FaultKind::kTxIdMismatch, "TxId does not recompute"};
  }
  const auto& tx = *st.decoded;
  if (!crypto::verify(params, tx.sender_pub, tx.signing_bytes(), tx.signature)) {
    return ChainFault{b.height, i, FaultKind::kBadSignature, "signature does not verify"};
  }
  return std::nullopt;
}

bool earlier(const ChainFault& a, const ChainFault& b) {
  if (a.height != b.height) return a.height < b.height;
  // Header faults come before any tx fault in the same block.
  if (!a.tx_index) return b.tx_index.has_value();
  if (!b.tx_index) return false;
  return *a.tx_index < *b.tx_index;
}

}  // namespace

ChainReport Ledger::verify_blocks(bool parallel) const {
  std::shared_lock lock(mutex_);
  const std::size_t n_blocks = blocks_.size();

  struct Item {
    std::size_t height;
    std::size_t index;
  };
  std::vector<Item> items;
  for (std::size_t h = 0; h < n_blocks; ++h) {
    const auto n = std::min(block_txs_[h].size(), blocks_[h].tx_ids.size());
    for (std::size_t i = 0; i < n; ++i) items.push_back({h, i});
  }

  std::vector<std::optional<ChainFault>> header_faults(n_blocks);
  std::vector<std::optional<ChainFault>> tx_faults(items.size());
  const auto n_items = static_cast<std::int64_t>(items.size());
  const auto n_headers = static_cast<std::int64_t>(n_blocks);

  if (parallel) {
#pragma omp parallel
    {
#pragma omp for schedule(static) nowait
      for (std::int64_t h = 0; h < n_headers; ++h) {
        header_faults[h] = check_header(params_, blocks_, block_txs_, static_cast<std::size_t>(h));
      }
#pragma omp for schedule(dynamic, 8)
      for (std::int64_t k = 0; k < n_items; ++k) {
        const auto& it = items[k];
        tx_faults[k] = check_tx(params_, blocks_[it.height], block_txs_[it.height][it.index],
                                it.index);
      }
    }
  } else {
    for (std::int64_t h = 0; h < n_headers; ++h) {
      header_faults[h] = check_header(params_, blocks_, block_txs_, static_cast<std::size_t>(h));
    }
    for (std::int64_t k = 0; k < n_items; ++k) {
      const auto& it = items[k];
      tx_faults[k] =
          check_tx(params_, blocks_[it.height], block_txs_[it.height][it.index], it.index);
    }
  }

  std::optional<ChainFault> first;
  auto consider = [&](const std::optional<ChainFault>& f) {
    if (f && (!first || earlier(*f, *first))) first = f;
  };
  for (const auto& f : header_faults) consider(f);
  for (const auto& f : tx_faults) consider(f);

  // Nonce sequences depend on chain order, so this pass stays sequential.
  std::map<Address, std::uint64_t> next;
  for (std::size_t h = 0; h < n_blocks && !first; ++h) {
    for (std::size_t i = 0; i < block_txs_[h].size(); ++i) {
      const auto& st = block_txs_[h][i];
      if (!st.decoded) continue;
      auto addr = address_of(params_, st.decoded->sender_pub);
      auto& expected = next[addr];
      if (st.decoded->nonce != expected) {
        consider(ChainFault{h, i, FaultKind::kNonceSequence,
                            "nonce " + std::to_string(st.decoded->nonce) + ", expected " +
                                std::to_string(expected)});
        break;
      }
      ++expected;
    }
  }

  ChainReport report;
  report.ok = !first.has_value();
  report.fault = first;
  return report;
}

}  // namespace ehr::ledger
