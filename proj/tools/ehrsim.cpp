// ehrsim: scenario runner and benchmarks.
//
//   ehrsim scenario      --seed 42 --hospitals 1 --doctors 2 --patients 1 --sizes 1K
//   ehrsim bench-enc     --sizes 1M,2M,4M --reps 3        (--full-range for 50..500 MB)
//   ehrsim bench-comm    --doctors 1,2,4,8
//   ehrsim bench-latency --patients 1,2,5,10 --seal-latency-ms 0
//
// Every flag can also come from `ehrsim --config FILE <subcommand>`: one
// `key = value` per line, keys named after the long flags, grouped under a
// [subcommand] section. Flags given on the command line win.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "ehr/harness.hpp"

namespace {

using namespace ehr;
using namespace ehr::harness;

// "4096", "4K", "64M" (binary units).
std::size_t parse_size(const std::string& text) {
  if (text.empty()) throw CLI::ValidationError("size", "empty size");
  std::size_t mult = 1;
  std::string digits = text;
  switch (std::toupper(static_cast<unsigned char>(text.back()))) {
    case 'K': mult = 1024; digits.pop_back(); break;
    case 'M': mult = kMiB; digits.pop_back(); break;
    case 'G': mult = 1024 * kMiB; digits.pop_back(); break;
    default: break;
  }
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(digits, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != digits.size()) throw CLI::ValidationError("size", "bad size: " + text);
  return static_cast<std::size_t>(v) * mult;
}

std::vector<std::size_t> parse_sizes(const std::vector<std::string>& items) {
  std::vector<std::size_t> out;
  for (const auto& s : items) out.push_back(parse_size(s));
  return out;
}

struct Output {
  std::string path;
  std::string format = "csv";

  void add_to(CLI::App* app) {
    app->add_option("--out", path, "Write results here instead of stdout");
    app->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
  }

  void write(const std::string& text) const {
    if (path.empty()) {
      std::cout << text;
      return;
    }
    std::ofstream out(path, std::ios::trunc);
    out << text;
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  }

  void write(const Table& t) const { write(format == "json" ? t.to_json() : t.to_csv()); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated EHR sharing: scenarios and benchmarks"};
  app.set_config("--config", "", "Read options from a key = value file");
  app.require_subcommand(1);

  // scenario
  ScenarioConfig sc;
  std::vector<std::string> sc_sizes{"1K"};
  std::uint64_t sc_retention = 0;
  bool sc_no_timings = false;
  Output sc_out;
  sc_out.format = "json";
  auto* scenario = app.add_subcommand("scenario", "Run the full create/reshare/recover flow");
  scenario->add_option("--seed", sc.seed);
  scenario->add_option("--hospitals", sc.n_hospitals)->check(CLI::PositiveNumber);
  scenario->add_option("--doctors", sc.n_doctors)->check(CLI::PositiveNumber);
  scenario->add_option("--patients", sc.n_patients)->check(CLI::PositiveNumber);
  scenario->add_option("--sizes", sc_sizes, "Record sizes per patient, e.g. 1K,64K")
      ->delimiter(',');
  scenario->add_option("--reshares", sc.reshares_per_record, "Grants per record");
  scenario->add_option("--seal-latency-ms", sc.block_seal_latency_ms);
  auto* retention_opt =
      scenario->add_option("--retention", sc_retention, "Retention in seconds; sweep at the end");
  scenario->add_option("--curve", sc.curve_id);
  scenario->add_flag("--tamper", sc.tamper, "Corrupt one released CHR byte");
  scenario->add_flag("--no-timings", sc_no_timings, "Omit wall-clock fields");
  sc_out.add_to(scenario);

  // bench-enc
  EncBenchConfig ec;
  std::vector<std::string> ec_sizes;
  bool ec_full = false;
  Output ec_out;
  auto* bench_enc = app.add_subcommand("bench-enc", "Record encryption/decryption time by size");
  bench_enc->add_option("--sizes", ec_sizes, "Ascending sizes, default 1M..64M")->delimiter(',');
  bench_enc->add_flag("--full-range", ec_full, "50..500 MB sweep");
  bench_enc->add_option("--reps", ec.reps)->check(CLI::PositiveNumber);
  bench_enc->add_option("--min-sample-ms", ec.min_sample_ms, "Repeat each timed op at least this long");
  bench_enc->add_option("--seed", ec.seed);
  ec_out.add_to(bench_enc);

  // bench-comm
  CommBenchConfig cc;
  std::string cc_size = "1K";
  Output cc_out;
  auto* bench_comm = app.add_subcommand("bench-comm", "Bytes sent by patient and hospital");
  bench_comm->add_option("--doctors", cc.doctor_counts, "Grantee counts")->delimiter(',');
  bench_comm->add_option("--record-size", cc_size);
  bench_comm->add_option("--seed", cc.seed);
  cc_out.add_to(bench_comm);

  // bench-latency
  LatencyBenchConfig lc;
  std::string lc_size = "4K";
  Output lc_out;
  auto* bench_lat = app.add_subcommand("bench-latency", "Consult latency by concurrent patients");
  bench_lat->add_option("--patients", lc.patient_counts, "Concurrent patient counts")
      ->delimiter(',');
  bench_lat->add_option("--seal-latency-ms", lc.block_seal_latency_ms);
  bench_lat->add_option("--record-size", lc_size);
  bench_lat->add_option("--reps", lc.reps)->check(CLI::PositiveNumber);
  bench_lat->add_option("--seed", lc.seed);
  lc_out.add_to(bench_lat);

  CLI11_PARSE(app, argc, argv);

  try {
    if (scenario->parsed()) {
      sc.record_sizes = parse_sizes(sc_sizes);
      if (retention_opt->count() > 0) sc.retention = sc_retention;
      auto report = run_scenario(sc);
      sc_out.write(sc_out.format == "json" ? report.to_json(!sc_no_timings)
                                           : report.to_csv(!sc_no_timings));
      if (!report.ok()) {
        if (report.failure) {
          std::cerr << "scenario failed in phase " << report.failure->phase << ": "
                    << report.failure->detail << "\n";
        } else {
          std::cerr << "chain verification failed\n";
        }
        return 1;
      }
    } else if (bench_enc->parsed()) {
      ec.sizes = ec_full ? full_enc_sizes()
                         : (ec_sizes.empty() ? default_enc_sizes() : parse_sizes(ec_sizes));
      ec_out.write(bench_encryption(ec));
    } else if (bench_comm->parsed()) {
      cc.record_size = parse_size(cc_size);
      cc_out.write(bench_communication(cc));
    } else if (bench_lat->parsed()) {
      lc.record_size = parse_size(lc_size);
      lc_out.write(bench_latency(lc));
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
