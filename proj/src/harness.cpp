#include "ehr/harness.hpp"

#include <omp.h>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <nlohmann/json.hpp>
#include <sstream>

namespace ehr::harness {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Stats {
  double mean = 0, sd = 0, max = 0;
};

Stats stats(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  for (double x : xs) {
    s.sd += (x - s.mean) * (x - s.mean);
    s.max = std::max(s.max, x);
  }
  s.sd = xs.size() > 1 ? std::sqrt(s.sd / static_cast<double>(xs.size() - 1)) : 0.0;
  return s;
}

std::string format_number(double v) {
  std::ostringstream out;
  if (v == std::floor(v) && std::fabs(v) < 1e15) {
    out << static_cast<long long>(v);
  } else {
    out.precision(6);
    out << std::fixed << v;
  }
  return out.str();
}

json report_json(const MetricsReport& r, bool timings) {
  const auto& c = r.config;
  json j;
  j["config"] = {{"seed", c.seed},
                 {"n_hospitals", c.n_hospitals},
                 {"n_doctors", c.n_doctors},
                 {"n_patients", c.n_patients},
                 {"record_sizes", c.record_sizes},
                 {"reshares_per_record", c.reshares_per_record},
                 {"block_seal_latency_ms", c.block_seal_latency_ms},
                 {"tamper", c.tamper},
                 {"curve", c.curve_id}};
  if (c.retention) j["config"]["retention"] = *c.retention;
  j["message_bytes"] = r.message_bytes;
  j["patient_bytes"] = r.patient_bytes;
  j["hospital_bytes"] = r.hospital_bytes;
  j["records_created"] = r.records_created;
  j["reshares"] = r.reshares;
  j["recoveries"] = r.recoveries;
  j["deleted"] = r.deleted;
  j["chain_height"] = r.chain_height;
  j["chain_tip"] = r.chain_tip;
  j["chain_verified"] = r.chain_verified;
  j["ok"] = r.ok();
  if (r.failure) {
    j["failure"] = {{"phase", r.failure->phase},
                    {"code", std::string(to_string(r.failure->code))},
                    {"detail", r.failure->detail}};
  }
  if (timings) {
    json phases = json::array();
    for (const auto& p : r.phases) phases.push_back({{"phase", p.name}, {"wall_ms", p.wall_ms}});
    j["phases"] = phases;
    j["patient_latency_ms"] = r.patient_latency_ms;
  }
  return j;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (n_hospitals < 1 || n_doctors < 1 || n_patients < 1) {
    throw Error(ErrorCode::kInvalidConfig, "counts must be >= 1");
  }
  if (n_doctors < n_hospitals) {
    throw Error(ErrorCode::kInvalidConfig, "need at least one doctor per hospital");
  }
  if (record_sizes.empty()) throw Error(ErrorCode::kInvalidConfig, "no record sizes");
  for (auto s : record_sizes) {
    if (s < 1) throw Error(ErrorCode::kInvalidConfig, "record sizes must be >= 1");
  }
}

std::string MetricsReport::to_json(bool include_timings) const {
  return report_json(*this, include_timings).dump(2) + "\n";
}

std::string MetricsReport::to_csv(bool include_timings) const {
  // Flattened key,value pairs.
  std::ostringstream out;
  out << "key,value\n";
  auto j = report_json(*this, include_timings).flatten();
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto key = it.key().substr(1);
    std::replace(key.begin(), key.end(), '/', '.');
    out << key << ',' << (it->is_string() ? it->get<std::string>() : it->dump()) << '\n';
  }
  return out.str();
}

MetricsReport run_scenario(const ScenarioConfig& config) {
  config.validate();
  MetricsReport report;
  report.config = config;
  report.patient_latency_ms.assign(config.n_patients, 0.0);

  std::string phase;
  auto timed = [&](const std::string& name, auto&& body) {
    phase = name;
    auto t0 = Clock::now();
    body();
    report.phases.push_back({name, ms_since(t0)});
  };
  auto count = [&](const std::string& kind, std::size_t n) { report.message_bytes[kind] += n; };
  for (const char* kind : {"appointment", "masked_entry", "grant_tx", "anchor_tx", "chr_upload",
                           "access_request", "release"}) {
    report.message_bytes[kind] = 0;
  }

  std::unique_ptr<World> world;
  struct Created {
    RecordRef ref;
    Bytes body;
  };
  std::vector<Created> records;
  struct Pending {
    std::size_t record;
    std::size_t grantee;
    ReshareTrace trace;
  };
  std::vector<Pending> releases;

  try {
    timed("setup", [&] {
      WorldConfig wc;
      wc.seed = config.seed;
      wc.n_hospitals = config.n_hospitals;
      wc.n_doctors = config.n_doctors;
      wc.n_patients = config.n_patients;
      wc.curve_id = config.curve_id;
      wc.ledger.seal_latency = std::chrono::milliseconds(config.block_seal_latency_ms);
      world = std::make_unique<World>(wc);
    });

    timed("create", [&] {
      auto body_rng = world->rng().fork("bodies");
      for (std::size_t p = 0; p < config.n_patients; ++p) {
        auto local = world->doctors_at(world->hospital_of_patient(p));
        auto t0 = Clock::now();
        for (std::size_t k = 0; k < config.record_sizes.size(); ++k) {
          auto body = body_rng.bytes(config.record_sizes[k]);
          auto ref = world->create_record(p, local[(p + k) % local.size()], body, "consultation",
                                          config.retention);
          count("appointment", ref.appointment.encode().size());
          count("anchor_tx", world->ledger().get_transaction(ref.anchored.tx_id).encode().size());
          count("chr_upload", ref.anchored.encrypted.ciphertext.bytes.size());
          count("masked_entry", ref.entry.encode().size());
          records.push_back({std::move(ref), std::move(body)});
          ++report.records_created;
        }
        report.patient_latency_ms[p] += ms_since(t0);
      }
    });

    timed("reshare", [&] {
      for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& ref = records[i].ref;
        for (std::size_t r = 0; r < config.reshares_per_record; ++r) {
          auto grantee = (ref.creator + 1 + r) % config.n_doctors;
          auto& doc = world->doctor(grantee);
          auto t0 = Clock::now();
          auto now = world->tick();
          Pending pending{i, grantee, {}};
          auto& t = pending.trace;
          std::tie(t.grant, t.grant_tx) =
              world->grant(ref, grantee, world->patient_rng(ref.patient), now);
          auto onchain = world->ledger().get_transaction(t.grant_tx);
          t.grant_tx_bytes = onchain.encode();
          t.pass = doc.accept_grant(exchange::ReshareGrant::decode(world->params(), onchain.payload));
          t.request = doc.build_access_request(t.pass, world->doctor_rng(grantee));
          t.release = world->store_for(t.pass.hospital_id)
                          .handle_access_request(t.request, world->ha_public_key(), now);
          count("grant_tx", t.grant_tx_bytes.size());
          count("access_request", t.request.encode().size());
          count("release", t.release.encode().size());
          report.patient_latency_ms[ref.patient] += ms_since(t0);
          releases.push_back(std::move(pending));
          ++report.reshares;
        }
      }
    });

    timed("recover", [&] {
      for (std::size_t i = 0; i < releases.size(); ++i) {
        auto& [idx, grantee, t] = releases[i];
        const auto& rec = records[idx];
        if (config.tamper && i == 0 && !t.release.chr.bytes.empty()) {
          t.release.chr.bytes[t.release.chr.bytes.size() / 2] ^= 0x01;
        }
        auto t0 = Clock::now();
        t.recovered = world->doctor(grantee).recover_record(t.request.w, t.release, world->ledger());
        report.patient_latency_ms[rec.ref.patient] += ms_since(t0);
        if (t.recovered != rec.body) {
          throw Error(ErrorCode::kAssertionFailed, "recovered body differs from the original");
        }
        ++report.recoveries;
      }
    });

    timed("audit", [&] {
      if (config.retention) {
        auto sweep_at = world->tick(*config.retention);
        for (std::size_t h = 0; h < world->hospital_count(); ++h) {
          report.deleted += world->store(h).delete_expired(sweep_at);
        }
      }
      std::size_t releases_logged = 0;
      for (std::size_t h = 0; h < world->hospital_count(); ++h) {
        for (const auto& a : world->store(h).audit_log()) releases_logged += a.outcome == "released";
      }
      if (releases_logged != report.reshares) {
        throw Error(ErrorCode::kAssertionFailed, "audit log does not match the releases");
      }
    });
  } catch (const Error& e) {
    report.failure = ScenarioFailure{phase, e.code(), e.what()};
  } catch (const std::exception& e) {
    report.failure = ScenarioFailure{phase, ErrorCode::kAssertionFailed, e.what()};
  }

  if (world) {
    auto& ledger = world->ledger();
    report.chain_verified = static_cast<bool>(ledger.verify_chain());
    report.chain_height = ledger.height();
    report.chain_tip = to_hex(ledger.block_at(ledger.height() - 1).block_hash.view());
  }
  report.patient_bytes = report.message_bytes["appointment"] +
                         report.message_bytes["masked_entry"] + report.message_bytes["grant_tx"];
  report.hospital_bytes = report.message_bytes["release"];
  return report;
}

std::string Table::to_csv() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
  return out.str();
}

std::string Table::to_json() const {
  json arr = json::array();
  for (const auto& row : rows) {
    json obj;
    for (std::size_t i = 0; i < columns.size() && i < row.size(); ++i) {
      if (row[i] == std::floor(row[i])) {
        obj[columns[i]] = static_cast<long long>(row[i]);
      } else {
        obj[columns[i]] = row[i];
      }
    }
    arr.push_back(obj);
  }
  return arr.dump(2) + "\n";
}

std::vector<double> Table::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw Error(ErrorCode::kInvalidConfig, "no column " + name);
  auto idx = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  for (const auto& row : rows) out.push_back(row.at(idx));
  return out;
}

std::vector<std::size_t> default_enc_sizes() {
  std::vector<std::size_t> out;
  for (std::size_t mb = 1; mb <= 64; mb *= 2) out.push_back(mb * kMiB);
  return out;
}

std::vector<std::size_t> full_enc_sizes() {
  std::vector<std::size_t> out;
  for (std::size_t mb = 50; mb <= 500; mb += 50) out.push_back(mb * 1000 * 1000);
  return out;
}

Table bench_encryption(const EncBenchConfig& config) {
  if (config.sizes.empty()) throw Error(ErrorCode::kInvalidConfig, "no sizes");
  if (config.reps < 1) throw Error(ErrorCode::kInvalidConfig, "reps must be >= 1");
  if (!(config.min_sample_ms >= 0)) throw Error(ErrorCode::kInvalidConfig, "min_sample_ms < 0");
  for (std::size_t i = 0; i < config.sizes.size(); ++i) {
    if (config.sizes[i] == 0) throw Error(ErrorCode::kInvalidConfig, "size 0");
    if (i && config.sizes[i] <= config.sizes[i - 1]) {
      throw Error(ErrorCode::kInvalidConfig, "sizes must be strictly ascending");
    }
  }

#if defined(__GLIBC__)
  // A fixed threshold stops glibc from moving buffers between heap and mmap
  // part way through the sweep.
  mallopt(M_MMAP_THRESHOLD, 128 * 1024);
#endif
  Table t{{"size_bytes", "enc_mean_ms", "enc_sd_ms", "dec_mean_ms", "dec_sd_ms"}, {}};
  Rng rng(config.seed);
  auto key = crypto::random_symmetric_key(rng);
  for (auto size : config.sizes) {
    auto copies = std::max<std::size_t>(1, (config.working_set_bytes + size - 1) / size);
    std::vector<Bytes> bodies;
    std::vector<crypto::Ciphertext> cts(copies);
    for (std::size_t i = 0; i < copies; ++i) bodies.push_back(rng.bytes(size));

    // Warm-up pass touches every buffer once and sizes the inner loop.
    auto t0 = Clock::now();
    for (std::size_t i = 0; i < copies; ++i) cts[i] = crypto::sym_encrypt(key, bodies[i], rng);
    for (std::size_t i = 0; i < copies; ++i) (void)crypto::sym_decrypt(key, cts[i]);
    auto op_ms = std::max(ms_since(t0) / static_cast<double>(2 * copies), 1e-3);
    auto iters = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(config.min_sample_ms / op_ms)));

    std::vector<double> enc, dec;
    std::size_t next = 0;
    for (std::size_t r = 0; r < config.reps; ++r) {
      auto first = next;
      t0 = Clock::now();
      for (std::size_t i = 0; i < iters; ++i, next = (next + 1) % copies) {
        cts[next] = crypto::sym_encrypt(key, bodies[next], rng);
      }
      enc.push_back(ms_since(t0) / static_cast<double>(iters));
      Bytes pt;
      next = first;
      t0 = Clock::now();
      for (std::size_t i = 0; i < iters; ++i, next = (next + 1) % copies) {
        pt = crypto::sym_decrypt(key, cts[next]);
      }
      dec.push_back(ms_since(t0) / static_cast<double>(iters));
      auto last = (next + copies - 1) % copies;
      if (pt != bodies[last]) throw Error(ErrorCode::kAssertionFailed, "decrypt mismatch");
    }
    auto e = stats(enc), d = stats(dec);
    t.rows.push_back({static_cast<double>(size), e.mean, e.sd, d.mean, d.sd});
  }
  return t;
}

Table bench_communication(const CommBenchConfig& config) {
  if (config.record_size < 1) throw Error(ErrorCode::kInvalidConfig, "record size must be >= 1");
  Table t{{"n_doctors", "patient_bytes", "hospital_bytes", "grant_bytes", "release_bytes",
           "appointment_bytes", "masked_entry_bytes"},
          {}};
  for (auto n : config.doctor_counts) {
    if (n < 1) throw Error(ErrorCode::kInvalidConfig, "doctor count must be >= 1");
    WorldConfig wc;
    wc.seed = config.seed;
    wc.n_doctors = n + 1;  // creator plus n grantees
    World world(wc);
    auto body = world.rng().fork("body").bytes(config.record_size);
    auto ref = world.create_record(0, 0, body);

    auto appointment = ref.appointment.encode().size();
    auto entry = ref.entry.encode().size();
    std::size_t grants = 0, releases = 0, grant_one = 0, release_one = 0;
    for (std::size_t g = 1; g <= n; ++g) {
      auto trace = world.reshare(ref, g);
      if (trace.recovered != body) throw Error(ErrorCode::kAssertionFailed, "recovery mismatch");
      grant_one = trace.grant_tx_bytes.size();
      release_one = trace.release.encode().size();
      grants += grant_one;
      releases += release_one;
    }
    t.rows.push_back({static_cast<double>(n), static_cast<double>(appointment + entry + grants),
                      static_cast<double>(releases), static_cast<double>(grant_one),
                      static_cast<double>(release_one), static_cast<double>(appointment),
                      static_cast<double>(entry)});
  }
  return t;
}

Table bench_latency(const LatencyBenchConfig& config) {
  if (config.reps < 1) throw Error(ErrorCode::kInvalidConfig, "reps must be >= 1");
  if (config.record_size < 1) throw Error(ErrorCode::kInvalidConfig, "record size must be >= 1");
  Table t{{"n_patients", "mean_latency_ms", "sd_latency_ms", "max_latency_ms"}, {}};
  omp_set_dynamic(0);

  for (auto n : config.patient_counts) {
    if (n < 1) throw Error(ErrorCode::kInvalidConfig, "patient count must be >= 1");
    std::vector<double> samples;
    for (std::size_t rep = 0; rep < config.reps; ++rep) {
      WorldConfig wc;
      wc.seed = config.seed + rep;
      wc.n_patients = n;
      wc.n_doctors = 2 * n;  // doctor i creates, doctor n+i receives the grant
      wc.ledger.seal_latency = std::chrono::milliseconds(config.block_seal_latency_ms);
      World world(wc);
      std::vector<Bytes> bodies;
      auto body_rng = world.rng().fork("bodies");
      for (std::size_t i = 0; i < n; ++i) bodies.push_back(body_rng.bytes(config.record_size));
      auto now = world.tick();

      std::vector<double> latency(n, 0.0);
      std::vector<std::exception_ptr> errors(n);
      Clock::time_point t0;
      int team = 0;
#pragma omp parallel num_threads(static_cast<int>(n))
      {
        auto i = static_cast<std::size_t>(omp_get_thread_num());
#pragma omp single
        {
          team = omp_get_num_threads();
          t0 = Clock::now();
        }
        try {
          auto ref = world.create_record_at(i, i, bodies[i], "consultation", std::nullopt, now);
          auto trace = world.reshare_at(ref, n + i, now);
          if (trace.recovered != bodies[i]) {
            throw Error(ErrorCode::kAssertionFailed, "recovery mismatch");
          }
          latency[i] = ms_since(t0);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
      if (static_cast<std::size_t>(team) != n) {
        throw Error(ErrorCode::kInvalidConfig, "OpenMP gave " + std::to_string(team) +
                                                   " threads, wanted " + std::to_string(n));
      }
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
      samples.insert(samples.end(), latency.begin(), latency.end());
    }
    auto s = stats(samples);
    t.rows.push_back({static_cast<double>(n), s.mean, s.sd, s.max});
  }
  return t;
}

}  // namespace ehr::harness
