#include "ehr/world.hpp"

#include <cstdio>

#include "ehr/error.hpp"

namespace ehr::harness {

namespace {
constexpr const char* kAuthority = "HA-HEALTH-AUTHORITY";

std::string numbered(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%0*zu", prefix, width, i + 1);
  return buf;
}
}  // namespace

std::string hospital_local_id(std::size_t i) { return numbered("HOSP", i, 3); }
std::string doctor_local_id(std::size_t i) { return numbered("DR", i, 4); }
std::string patient_local_id(std::size_t i) { return numbered("PT", i, 6); }

World::World(const WorldConfig& config)
    : config_(config),
      rng_(config.seed),
      params_(crypto::setup_params(config.curve_id, config.h1, config.h2)),
      now_(config.start_time) {
  if (config.n_hospitals < 1 || config.n_doctors < 1 || config.n_patients < 1) {
    throw Error(ErrorCode::kInvalidConfig, "hospital, doctor and patient counts must be >= 1");
  }
  if (config.n_doctors < config.n_hospitals) {
    throw Error(ErrorCode::kInvalidConfig, "every hospital needs at least one doctor");
  }
  ledger_ = std::make_unique<ledger::Ledger>(params_, config.ledger);
  registry_ = std::make_unique<registry::Registry>(*ledger_);
  auto setup_rng = rng_.fork("setup");
  registry_->system_setup(kAuthority, setup_rng);

  for (std::size_t h = 0; h < config.n_hospitals; ++h) {
    auto id = registry_->register_participant(registry::Role::kHospital,
                                              {kAuthority, hospital_local_id(h), ""}, setup_rng);
    store_by_id_.emplace(id.id_string(), stores_.size());
    stores_.push_back(std::make_unique<hospital::HospitalStore>(
        params_, std::move(id), *ledger_, rng_.fork("store-" + std::to_string(h)), config.store));
  }

  for (std::size_t d = 0; d < config.n_doctors; ++d) {
    auto id = registry_->register_participant(
        registry::Role::kDoctor,
        {kAuthority, hospital_local_id(hospital_of_doctor(d)), doctor_local_id(d)}, setup_rng);
    auto enrollment = registry::register_doctor(params_, id, setup_rng);
    auto cert = registry_->issue_certificate(
        enrollment.request(), {now_, now_ + kCertificateLifetime}, now_, setup_rng);
    doctors_.emplace_back(params_, std::move(id), std::move(enrollment),
                          registry_->ha_public_key());
    doctors_.back().install_certificate(std::move(cert));
    doctor_rngs_.push_back(rng_.fork("doctor-" + std::to_string(d)));
  }

  for (std::size_t p = 0; p < config.n_patients; ++p) {
    auto id = registry_->register_participant(
        registry::Role::kPatient,
        {kAuthority, hospital_local_id(hospital_of_patient(p)), patient_local_id(p)}, setup_rng);
    patients_.emplace_back(params_, std::move(id), config.patient);
    patient_rngs_.push_back(rng_.fork("patient-" + std::to_string(p)));
  }
}

World::~World() = default;

const crypto::GroupPoint& World::ha_public_key() const { return registry_->ha_public_key(); }

hospital::HospitalStore& World::store_for(const std::string& hospital_id) {
  auto it = store_by_id_.find(hospital_id);
  if (it == store_by_id_.end()) throw Error(ErrorCode::kUnknownHospital, hospital_id);
  return *stores_[it->second];
}

std::vector<std::size_t> World::doctors_at(std::size_t hospital) const {
  std::vector<std::size_t> out;
  for (std::size_t d = 0; d < doctors_.size(); ++d) {
    if (hospital_of_doctor(d) == hospital) out.push_back(d);
  }
  return out;
}

std::vector<Bytes> World::identity_needles() const {
  std::vector<Bytes> out;
  auto add = [&](const registry::ParticipantIdentity& id) {
    out.push_back(to_bytes(id.id_string()));
    out.emplace_back(id.address.bytes.begin(), id.address.bytes.end());
  };
  for (const auto& p : patients_) add(p.identity());
  for (const auto& d : doctors_) add(d.identity());
  return out;
}

RecordRef World::create_record(std::size_t patient, std::size_t doctor, Bytes body,
                               std::string record_type, std::optional<std::uint64_t> retention) {
  auto now = tick();
  return create_record_at(patient, doctor, std::move(body), std::move(record_type), retention, now);
}

RecordRef World::create_record_at(std::size_t patient, std::size_t doctor, Bytes body,
                                  std::string record_type,
                                  std::optional<std::uint64_t> retention, std::uint64_t now) {
  auto& pat = patients_.at(patient);
  auto& doc = doctors_.at(doctor);
  RecordRef ref;
  ref.patient = patient;
  ref.creator = doctor;
  ref.appointment = pat.book_appointment(now, patient_rngs_[patient]);
  ref.anchored = doc.create_and_anchor_record(ref.appointment, *registry_, std::move(body),
                                              std::move(record_type), now, doctor_rngs_[doctor],
                                              *ledger_);
  ref.entry = pat.derive_masked_entry(ref.anchored, patient_rngs_[patient]);
  ref.handle = ref.entry.x_index;
  store_for(ref.anchored.hospital_id)
      .store_record(ref.entry, ref.anchored.encrypted.ciphertext, now, retention);
  return ref;
}

std::pair<exchange::ReshareGrant, ledger::TxId> World::grant(const RecordRef& record,
                                                             std::size_t grantee, Rng& rng,
                                                             std::uint64_t now) {
  auto& doc = doctors_.at(grantee);
  return patients_.at(record.patient)
      .grant_access(record.handle, doc.tag_public_key(), doc.enc_public_key(), rng, *ledger_, now);
}

ReshareTrace World::reshare(const RecordRef& record, std::size_t grantee,
                            const std::function<void(exchange::ReleasedRecord&)>& tamper) {
  auto now = tick();
  return reshare_at(record, grantee, now, tamper);
}

ReshareTrace World::reshare_at(const RecordRef& record, std::size_t grantee, std::uint64_t now,
                               const std::function<void(exchange::ReleasedRecord&)>& tamper) {
  auto& doc = doctors_.at(grantee);
  ReshareTrace t;
  std::tie(t.grant, t.grant_tx) = grant(record, grantee, patient_rngs_[record.patient], now);

  // The grantee reads the grant back from the chain, not from the patient.
  auto onchain = ledger_->get_transaction(t.grant_tx);
  t.grant_tx_bytes = onchain.encode();
  auto observed = exchange::ReshareGrant::decode(params_, onchain.payload);

  t.pass = doc.accept_grant(observed);
  t.request = doc.build_access_request(t.pass, doctor_rngs_[grantee]);
  t.release = store_for(t.pass.hospital_id).handle_access_request(t.request, ha_public_key(), now);
  if (tamper) tamper(t.release);
  t.recovered = doc.recover_record(t.request.w, t.release, *ledger_);
  return t;
}

}  // namespace ehr::harness
