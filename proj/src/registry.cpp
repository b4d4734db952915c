#include "ehr/registry.hpp"

#include <algorithm>
#include <ostream>

#include "ehr/error.hpp"

namespace ehr::registry {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kHealthAuthority: return "authority";
    case Role::kHospital: return "hospital";
    case Role::kDoctor: return "doctor";
    case Role::kPatient: return "patient";
  }
  return "unknown";
}

std::string_view to_string(CertStatus s) {
  switch (s) {
    case CertStatus::kValid: return "valid";
    case CertStatus::kBadSignature: return "bad-signature";
    case CertStatus::kNotYetValid: return "not-yet-valid";
    case CertStatus::kExpired: return "expired";
  }
  return "unknown";
}

std::string IdComponents::id_string() const {
  std::string out = authority;
  if (!hospital.empty() || !local.empty()) out += "/" + hospital;
  if (!local.empty()) out += "/" + local;
  return out;
}

Bytes EnrollmentRequest::encode() const {
  ByteWriter w;
  w.str16(doctor_id).raw(pk_enc.encode()).raw(tag_pub.encode());
  return std::move(w).take();
}

Bytes Certificate::body_bytes() const {
  ByteWriter w;
  w.u64(validity.not_before)
      .u64(validity.not_after)
      .raw(subject.view())
      .raw(view(subject_pk_enc.compressed()))
      .raw(view(subject_tag_pub.compressed()))
      .raw(issuer.view());
  return std::move(w).take();
}

Bytes Certificate::encode() const {
  ByteWriter w;
  w.raw(body_bytes()).blob32(signature.bytes);
  return std::move(w).take();
}

Certificate Certificate::decode(const crypto::SystemParams& params, ByteView bytes) {
  ByteReader r(bytes);
  Certificate c;
  c.validity.not_before = r.u64();
  c.validity.not_after = r.u64();
  c.subject.bytes = r.fixed<crypto::kDigestSize>();
  c.subject_pk_enc = crypto::decode_point(params, r.raw(crypto::kPointSize));
  c.subject_tag_pub = crypto::decode_point(params, r.raw(crypto::kPointSize));
  c.issuer.bytes = r.fixed<ledger::kAddressSize>();
  c.signature.bytes = r.blob32();
  r.expect_end();
  return c;
}

CertStatus check_certificate(const crypto::SystemParams& params, const Certificate& cert,
                             const crypto::GroupPoint& ha_pk, std::uint64_t now) {
  if (cert.subject_pk_enc.is_identity() || cert.subject_tag_pub.is_identity() ||
      !crypto::verify(params, ha_pk, cert.body_bytes(), cert.signature)) {
    return CertStatus::kBadSignature;
  }
  if (now < cert.validity.not_before) return CertStatus::kNotYetValid;
  if (now >= cert.validity.not_after) return CertStatus::kExpired;
  return CertStatus::kValid;
}

bool verify_certificate(const crypto::SystemParams& params, const Certificate& cert,
                        const crypto::GroupPoint& ha_pk, std::uint64_t now) {
  return check_certificate(params, cert, ha_pk, now) == CertStatus::kValid;
}

DoctorEnrollment register_doctor(const crypto::SystemParams& params,
                                 const ParticipantIdentity& doctor, Rng& rng) {
  if (doctor.role != Role::kDoctor) {
    throw Error(ErrorCode::kRoleMismatch,
                std::string(to_string(doctor.role)) + " cannot enroll as a doctor");
  }
  DoctorEnrollment e;
  e.doctor_id = doctor.id_string();
  e.pk_enc = doctor.enc_keypair.public_key;
  e.tag_secret = crypto::random_scalar(params, rng);
  e.tag_pub = crypto::base_mul(params, e.tag_secret);
  return e;
}

namespace {

bool well_formed_part(const std::string& s) {
  return !s.empty() && std::none_of(s.begin(), s.end(), [](char c) {
    return c == '/' || c == ' ' || c == '\n' || c == '\t';
  });
}

}  // namespace

Registry::Registry(ledger::Ledger& ledger) : ledger_(ledger), params_(ledger.params()) {}

std::pair<crypto::SystemParams, ParticipantIdentity> Registry::system_setup(
    std::string authority_id, Rng& rng) {
  std::unique_lock lock(mutex_);
  if (ha_) throw Error(ErrorCode::kAlreadySetup, "system setup already ran");
  if (!well_formed_part(authority_id)) {
    throw Error(ErrorCode::kMalformedId, "authority id '" + authority_id + "'");
  }
  ParticipantIdentity ha;
  ha.role = Role::kHealthAuthority;
  ha.id.authority = std::move(authority_id);
  ha.enc_keypair = crypto::keygen(params_, rng);
  ha.address = ledger_.create_account(ha.enc_keypair.public_key);

  auto trace = crypto::h2_keyed(params_, to_bytes("ehr-trace-key"), ha.enc_keypair.secret.view());
  tracing_key_.assign(trace.bytes.begin(), trace.bytes.end());

  by_id_.emplace(ha.id_string(), ha.address);
  by_address_.emplace(ha.address,
                      Entry{Role::kHealthAuthority, ha.id_string(), ha.enc_keypair.public_key});
  ha_ = ha;
  return {params_, ha};
}

bool Registry::is_setup() const {
  std::shared_lock lock(mutex_);
  return ha_.has_value();
}

void Registry::require_setup() const {
  if (!ha_) throw Error(ErrorCode::kNotSetup, "run system_setup first");
}

const crypto::SystemParams& Registry::params() const { return params_; }

const crypto::GroupPoint& Registry::ha_public_key() const {
  std::shared_lock lock(mutex_);
  require_setup();
  return ha_->enc_keypair.public_key;
}

const ledger::Address& Registry::ha_address() const {
  std::shared_lock lock(mutex_);
  require_setup();
  return ha_->address;
}

ParticipantIdentity Registry::register_participant(Role role, IdComponents id, Rng& rng) {
  std::unique_lock lock(mutex_);
  require_setup();
  if (role == Role::kHealthAuthority) {
    throw Error(ErrorCode::kRoleMismatch, "the health authority is created by system_setup");
  }
  if (id.authority != ha_->id.authority) {
    throw Error(ErrorCode::kMalformedId, "authority '" + id.authority + "' is not this HA");
  }
  if (!well_formed_part(id.hospital)) {
    throw Error(ErrorCode::kMalformedId, "hospital component '" + id.hospital + "'");
  }
  if (role == Role::kHospital) {
    if (!id.local.empty()) throw Error(ErrorCode::kMalformedId, "hospital ids have no local part");
  } else {
    if (!well_formed_part(id.local)) {
      throw Error(ErrorCode::kMalformedId, "local component '" + id.local + "'");
    }
    IdComponents hospital_id{id.authority, id.hospital, ""};
    auto h = by_id_.find(hospital_id.id_string());
    if (h == by_id_.end() || by_address_.at(h->second).role != Role::kHospital) {
      throw Error(ErrorCode::kUnknownHospital, hospital_id.id_string());
    }
  }
  auto id_string = id.id_string();
  if (by_id_.contains(id_string)) throw Error(ErrorCode::kDuplicateId, id_string);

  ParticipantIdentity p;
  p.role = role;
  p.id = std::move(id);
  p.enc_keypair = crypto::keygen(params_, rng);
  p.address = ledger_.create_account(p.enc_keypair.public_key);

  by_id_.emplace(id_string, p.address);
  by_address_.emplace(p.address, Entry{role, id_string, p.enc_keypair.public_key});
  by_subject_.emplace(crypto::h2_keyed(params_, to_bytes(id_string), tracing_key_), id_string);
  return p;
}

Certificate Registry::issue_certificate(const EnrollmentRequest& request, ValidityWindow validity,
                                        std::uint64_t now, Rng& rng) {
  std::shared_lock lock(mutex_);
  require_setup();
  auto it = by_id_.find(request.doctor_id);
  if (it == by_id_.end()) throw Error(ErrorCode::kUnknownDoctor, request.doctor_id);
  const auto& entry = by_address_.at(it->second);
  if (entry.role != Role::kDoctor) {
    throw Error(ErrorCode::kUnknownDoctor, request.doctor_id + " is not a doctor");
  }
  if (request.pk_enc.is_identity() || request.tag_pub.is_identity() ||
      !crypto::on_curve(params_, request.pk_enc) || !crypto::on_curve(params_, request.tag_pub)) {
    throw Error(ErrorCode::kInvalidPoint, "enrollment keys must be non-identity curve points");
  }
  if (request.pk_enc != entry.pk_enc) {
    throw Error(ErrorCode::kUnknownDoctor, "PK_D does not match the registered key");
  }
  if (validity.not_after <= validity.not_before || validity.not_after <= now) {
    throw Error(ErrorCode::kEmptyValidity, "validity window is empty or already over");
  }
  Certificate cert;
  cert.validity = validity;
  cert.subject = crypto::h2_keyed(params_, to_bytes(request.doctor_id), tracing_key_);
  cert.subject_pk_enc = request.pk_enc;
  cert.subject_tag_pub = request.tag_pub;
  cert.issuer = ha_->address;
  cert.signature = crypto::sign(params_, ha_->enc_keypair.secret, cert.body_bytes(), rng);
  return cert;
}

bool Registry::is_registered(const ledger::Address& address, Role role) const {
  std::shared_lock lock(mutex_);
  auto it = by_address_.find(address);
  return it != by_address_.end() && it->second.role == role;
}

std::optional<std::string> Registry::trace_address(const ledger::Address& address) const {
  std::shared_lock lock(mutex_);
  auto it = by_address_.find(address);
  if (it == by_address_.end()) return std::nullopt;
  return it->second.id_string;
}

std::optional<std::string> Registry::trace_subject(const crypto::Digest& subject) const {
  std::shared_lock lock(mutex_);
  auto it = by_subject_.find(subject);
  if (it == by_subject_.end()) return std::nullopt;
  return it->second;
}

crypto::Digest Registry::subject_for(const std::string& id_string) const {
  std::shared_lock lock(mutex_);
  require_setup();
  return crypto::h2_keyed(params_, to_bytes(id_string), tracing_key_);
}

void Registry::export_directory(std::ostream& out) const {
  std::shared_lock lock(mutex_);
  for (const auto& [addr, entry] : by_address_) {
    out << to_string(entry.role) << ' ' << to_hex(addr.view()) << ' ' << entry.id_string << '\n';
  }
}

std::size_t Registry::size() const {
  std::shared_lock lock(mutex_);
  return by_address_.size();
}

}  // namespace ehr::registry
