// Serial vs OpenMP chain verification on a synthetic chain.

#include <benchmark/benchmark.h>

#include <map>
#include <memory>
#include <vector>

#include "ehr/ledger.hpp"

namespace {

using namespace ehr;

// blocks x txs_per_block transactions from a handful of accounts.
std::unique_ptr<ledger::Ledger> build_chain(int blocks, int txs_per_block) {
  auto params = crypto::setup_params("secp256k1");
  auto chain = std::make_unique<ledger::Ledger>(params);
  Rng rng(9);
  std::vector<crypto::KeyPair> keys;
  for (int i = 0; i < 8; ++i) {
    keys.push_back(crypto::keygen(params, rng));
    chain->create_account(keys.back().public_key);
  }
  for (int b = 0; b < blocks; ++b) {
    for (int t = 0; t < txs_per_block; ++t) {
      ledger::send_transaction(*chain, keys[(b * txs_per_block + t) % keys.size()], std::nullopt,
                               rng.bytes(200), rng);
    }
    chain->seal_block(1000 + static_cast<std::uint64_t>(b));
  }
  return chain;
}

const ledger::Ledger& chain_for(int blocks) {
  static std::map<int, std::unique_ptr<ledger::Ledger>> cache;
  auto& slot = cache[blocks];
  if (!slot) slot = build_chain(blocks, 10);
  return *slot;
}

void BM_VerifySerial(benchmark::State& state) {
  const auto& chain = chain_for(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(chain.verify_chain_serial().ok);
  state.SetItemsProcessed(state.iterations() * state.range(0) * 10);
}

void BM_VerifyParallel(benchmark::State& state) {
  const auto& chain = chain_for(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(chain.verify_chain().ok);
  state.SetItemsProcessed(state.iterations() * state.range(0) * 10);
}

BENCHMARK(BM_VerifySerial)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VerifyParallel)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
