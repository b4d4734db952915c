#pragma once

// Scenario runner and the three benchmarks behind the ehrsim CLI.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ehr/error.hpp"
#include "ehr/world.hpp"

namespace ehr::harness {

struct ScenarioConfig {
  std::uint64_t seed = 42;
  std::size_t n_hospitals = 1;
  std::size_t n_doctors = 2;
  std::size_t n_patients = 1;
  /// Each patient gets one record per listed size.
  std::vector<std::size_t> record_sizes{1024};
  std::size_t reshares_per_record = 1;
  std::uint64_t block_seal_latency_ms = 0;
  std::optional<std::uint64_t> retention;
  /// Flip one CHR byte in the first release before recovery.
  bool tamper = false;
  std::string curve_id = "secp256k1";

  /// Throws Error(kInvalidConfig).
  void validate() const;
};

struct PhaseTiming {
  std::string name;
  double wall_ms = 0;
};

struct ScenarioFailure {
  std::string phase;
  ErrorCode code{};
  std::string detail;
};

struct MetricsReport {
  ScenarioConfig config;
  std::vector<PhaseTiming> phases;

  /// Serialized lengths summed per message kind: appointment, masked_entry,
  /// grant_tx, anchor_tx, chr_upload, access_request, release.
  std::map<std::string, std::size_t> message_bytes;
  std::size_t patient_bytes = 0;   // appointment + masked_entry + grant_tx
  std::size_t hospital_bytes = 0;  // release

  std::vector<double> patient_latency_ms;

  std::size_t records_created = 0;
  std::size_t reshares = 0;
  std::size_t recoveries = 0;
  std::size_t deleted = 0;
  std::uint64_t chain_height = 0;
  std::string chain_tip;
  bool chain_verified = false;
  std::optional<ScenarioFailure> failure;

  bool ok() const { return !failure && chain_verified; }

  /// Timing fields are left out when include_timings is false, which makes
  /// the output a pure function of the config.
  std::string to_json(bool include_timings = true) const;
  std::string to_csv(bool include_timings = true) const;
};

/// setup, create, reshare, recover, audit. Never throws for protocol
/// failures; they land in report.failure with the phase name.
MetricsReport run_scenario(const ScenarioConfig& config);

/// Numeric result table shared by the benchmarks.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string to_csv() const;
  std::string to_json() const;
  std::vector<double> column(const std::string& name) const;
};

struct EncBenchConfig {
  std::vector<std::size_t> sizes;  // bytes, strictly ascending, each >= 1
  std::size_t reps = 3;
  std::uint64_t seed = 42;
  // Each sample repeats the operation until it has run at least this long,
  // then reports the per-operation time. Small sizes otherwise time noise.
  double min_sample_ms = 10.0;
  // Repetitions rotate over distinct buffers covering at least this many
  // bytes, so small sizes are not served from cache.
  std::size_t working_set_bytes = 64 * 1024 * 1024;
};

inline constexpr std::size_t kMiB = 1024 * 1024;
std::vector<std::size_t> default_enc_sizes();  // 1..64 MiB, doubling
std::vector<std::size_t> full_enc_sizes();     // 50..500 MB

/// Columns: size_bytes, enc_mean_ms, enc_sd_ms, dec_mean_ms, dec_sd_ms.
Table bench_encryption(const EncBenchConfig& config);

struct CommBenchConfig {
  std::vector<std::size_t> doctor_counts{1, 2, 4, 8};
  std::size_t record_size = 1024;
  std::uint64_t seed = 42;
};

/// One record, then n reshares. Columns: n_doctors, patient_bytes,
/// hospital_bytes, grant_bytes, release_bytes, appointment_bytes,
/// masked_entry_bytes.
Table bench_communication(const CommBenchConfig& config);

struct LatencyBenchConfig {
  std::vector<std::size_t> patient_counts{1, 2, 5, 10};
  std::uint64_t block_seal_latency_ms = 0;
  std::size_t record_size = 4096;
  std::size_t reps = 3;
  std::uint64_t seed = 42;
};

/// n patient actors run a full consult concurrently against one hospital.
/// Columns: n_patients, mean_latency_ms, sd_latency_ms, max_latency_ms.
Table bench_latency(const LatencyBenchConfig& config);

}  // namespace ehr::harness
