#pragma once

// A complete simulated universe: one ledger, the HA, hospitals with their
// stores, certified doctors and registered patients, all derived from one
// seed. Used by the scenario runner, the benchmarks and the tests.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ehr/hospital_store.hpp"
#include "ehr/ledger.hpp"
#include "ehr/record_exchange.hpp"
#include "ehr/registry.hpp"

namespace ehr::harness {

inline constexpr std::uint64_t kDefaultStartTime = 1'700'000'000;
inline constexpr std::uint64_t kCertificateLifetime = 365ull * 24 * 3600;

struct WorldConfig {
  std::uint64_t seed = 42;
  std::size_t n_hospitals = 1;
  std::size_t n_doctors = 2;  // distributed round-robin over hospitals
  std::size_t n_patients = 1;
  std::string curve_id = "secp256k1";
  crypto::HashId h1 = crypto::HashId::kSha256;
  crypto::HashId h2 = crypto::HashId::kSha256;
  ledger::LedgerConfig ledger;
  hospital::StoreConfig store;
  exchange::PatientOptions patient;
  std::uint64_t start_time = kDefaultStartTime;
};

/// A created record: anchored, masked, stored.
struct RecordRef {
  std::size_t patient = 0;
  std::size_t creator = 0;  // doctor index
  crypto::Digest handle;    // X_i
  exchange::AnchoredRecord anchored;
  exchange::Appointment appointment;
  exchange::MaskedIndexEntry entry;
};

/// Every message of one reshare, kept so callers can count bytes or scan.
struct ReshareTrace {
  exchange::ReshareGrant grant;
  ledger::TxId grant_tx;
  Bytes grant_tx_bytes;
  exchange::AuthorizationPass pass;
  exchange::AccessRequest request;
  exchange::ReleasedRecord release;
  Bytes recovered;
};

class World {
 public:
  explicit World(const WorldConfig& config);
  ~World();

  const WorldConfig& config() const { return config_; }
  const crypto::SystemParams& params() const { return params_; }
  const crypto::GroupPoint& ha_public_key() const;

  ledger::Ledger& ledger() { return *ledger_; }
  registry::Registry& registry() { return *registry_; }

  std::size_t hospital_count() const { return stores_.size(); }
  hospital::HospitalStore& store(std::size_t i) { return *stores_.at(i); }
  hospital::HospitalStore& store_for(const std::string& hospital_id);

  exchange::Doctor& doctor(std::size_t i) { return doctors_.at(i); }
  exchange::Patient& patient(std::size_t i) { return patients_.at(i); }
  std::size_t doctor_count() const { return doctors_.size(); }
  std::size_t patient_count() const { return patients_.size(); }

  /// Index of the hospital a doctor or patient belongs to.
  std::size_t hospital_of_doctor(std::size_t d) const { return d % stores_.size(); }
  std::size_t hospital_of_patient(std::size_t p) const { return p % stores_.size(); }
  std::vector<std::size_t> doctors_at(std::size_t hospital) const;

  Rng& doctor_rng(std::size_t i) { return doctor_rngs_.at(i); }
  Rng& patient_rng(std::size_t i) { return patient_rngs_.at(i); }
  Rng& rng() { return rng_; }

  /// Simulated clock in seconds; tick() advances it and returns the new time.
  std::uint64_t now() const { return now_; }
  std::uint64_t tick(std::uint64_t seconds = 1) { return now_ += seconds; }

  /// Every identity string and address of registered patients and doctors.
  std::vector<Bytes> identity_needles() const;

  /// Appointment, create and anchor, mask, store. Uses the world clock.
  RecordRef create_record(std::size_t patient, std::size_t doctor, Bytes body,
                          std::string record_type = "consultation",
                          std::optional<std::uint64_t> retention = std::nullopt);

  /// Grant the record to `grantee` and run accept, request, release, recover.
  /// `tamper`, when set, mutates the released CHR before recovery.
  ReshareTrace reshare(const RecordRef& record, std::size_t grantee,
                       const std::function<void(exchange::ReleasedRecord&)>& tamper = {});

  /// Same as above at a fixed time without advancing the clock. Safe to call
  /// from several threads as long as no two share a patient or doctor.
  RecordRef create_record_at(std::size_t patient, std::size_t doctor, Bytes body,
                             std::string record_type, std::optional<std::uint64_t> retention,
                             std::uint64_t now);
  ReshareTrace reshare_at(const RecordRef& record, std::size_t grantee, std::uint64_t now,
                          const std::function<void(exchange::ReleasedRecord&)>& tamper = {});

  /// Only the grant step of reshare().
  std::pair<exchange::ReshareGrant, ledger::TxId> grant(const RecordRef& record,
                                                        std::size_t grantee, Rng& rng,
                                                        std::uint64_t now);

 private:
  WorldConfig config_;
  Rng rng_;
  crypto::SystemParams params_;
  std::unique_ptr<ledger::Ledger> ledger_;
  std::unique_ptr<registry::Registry> registry_;
  std::vector<std::unique_ptr<hospital::HospitalStore>> stores_;
  std::map<std::string, std::size_t> store_by_id_;
  std::vector<exchange::Doctor> doctors_;
  std::vector<exchange::Patient> patients_;
  std::vector<Rng> doctor_rngs_;
  std::vector<Rng> patient_rngs_;
  std::uint64_t now_;
};

std::string hospital_local_id(std::size_t i);
std::string doctor_local_id(std::size_t i);
std::string patient_local_id(std::size_t i);

}  // namespace ehr::harness
