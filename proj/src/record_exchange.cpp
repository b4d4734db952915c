#include "ehr/record_exchange.hpp"

#include "ehr/error.hpp"

namespace ehr::exchange {

using crypto::Digest;

IndexPads derive_index_pads(const crypto::SystemParams& params, const std::string& hospital_id,
                            std::uint64_t record_time, const PatientNonce& k_t) {
  IndexPads pads;
  pads.x = crypto::h2_keyed(params, index_message(hospital_id, record_time, 0), view(k_t));
  pads.y = crypto::h2_keyed(params, index_message(hospital_id, record_time, 1), view(k_t));
  return pads;
}

MaskedDerivation derive_masked_entry(const crypto::SystemParams& params,
                                     const std::string& hospital_id, std::uint64_t record_time,
                                     const ledger::TxId& tx_id, const crypto::SymmetricKey& key,
                                     Rng& rng) {
  MaskedDerivation out;
  rng.fill(out.k_t);
  auto pads = derive_index_pads(params, hospital_id, record_time, out.k_t);
  out.entry.x_index = pads.x;
  out.entry.z_masked_txid = crypto::xor_mask(tx_id.view(), pads.y);
  out.entry.k_masked_key = crypto::xor_mask(key.view(), pads.y);
  return out;
}

crypto::GroupPoint designation_tag(const crypto::SystemParams& params, const crypto::Scalar& r,
                                   const crypto::GroupPoint& tag_pub) {
  auto shared = crypto::point_mul(params, r, tag_pub);
  return crypto::base_mul(params, crypto::h1_point_to_scalar(params, shared));
}

ReshareGrant make_grant(const crypto::SystemParams& params, const crypto::GroupPoint& grantee_tag_pub,
                        const crypto::GroupPoint& grantee_pk_enc, const AuthorizationPass& pass,
                        Rng& rng) {
  if (grantee_tag_pub.is_identity() || grantee_pk_enc.is_identity() ||
      !crypto::on_curve(params, grantee_tag_pub) || !crypto::on_curve(params, grantee_pk_enc)) {
    throw Error(ErrorCode::kInvalidPoint, "grantee keys must be non-identity curve points");
  }
  auto r = crypto::random_scalar(params, rng);
  ReshareGrant g;
  g.r_point = crypto::base_mul(params, r);
  g.tag = designation_tag(params, r, grantee_tag_pub);
  g.c1 = crypto::pk_encrypt(params, grantee_pk_enc, pass.encode(), rng);
  return g;
}

AuthorizationPass open_grant(const crypto::SystemParams& params, const crypto::Scalar& tag_secret,
                             const crypto::Scalar& enc_secret, const ReshareGrant& grant,
                             std::size_t* decrypt_attempts) {
  if (grant.r_point.is_identity()) {
    throw Error(ErrorCode::kTagMismatch, "grant carries the identity as R");
  }
  auto expected = designation_tag(params, tag_secret, grant.r_point);
  if (expected != grant.tag) {
    throw Error(ErrorCode::kTagMismatch, "grant is not designated to this key");
  }
  if (decrypt_attempts) ++*decrypt_attempts;
  auto plain = crypto::pk_decrypt(params, enc_secret, grant.c1);
  try {
    return AuthorizationPass::decode(plain);
  } catch (const Error&) {
    throw Error(ErrorCode::kDecryptionFailed, "C1 does not hold an authorization pass");
  }
}

Bytes recover_record(const crypto::SystemParams& params, const ReleasedRecord& release,
                     const Digest& y_pad, const ledger::Ledger& ledger) {
  if (release.z_masked_txid.size() != crypto::kDigestSize ||
      release.k_masked_key.size() != crypto::kSymmetricKeySize) {
    throw Error(ErrorCode::kMalformedEncoding, "released (Z, K) have the wrong lengths");
  }
  auto tx_id = Digest::from(crypto::xor_mask(release.z_masked_txid, y_pad));
  auto key = crypto::SymmetricKey::from(crypto::xor_mask(release.k_masked_key, y_pad));

  auto tx = ledger.get_transaction(tx_id);  // kUnknownTransaction on a wrong pad
  if (payload_kind(tx.payload) != PayloadKind::kAnchor) {
    throw Error(ErrorCode::kNotAnAnchor, to_hex(tx_id.view()));
  }
  auto anchor = AnchorRecord::decode(tx.payload);
  if (crypto::h2_hash(params, release.chr.bytes) != anchor.digest) {
    throw Error(ErrorCode::kDigestMismatch,
                "CHR does not match eh1 anchored in tx " + to_hex(tx_id.view()));
  }
  return crypto::sym_decrypt(key, release.chr);
}

// --- Patient -----------------------------------------------------------------

Patient::Patient(crypto::SystemParams params, registry::ParticipantIdentity identity,
                 PatientOptions options)
    : params_(std::move(params)), identity_(std::move(identity)), options_(options) {}

Appointment Patient::book_appointment(std::uint64_t now, Rng& rng) const {
  Appointment a;
  a.patient_pub = identity_.enc_keypair.public_key;
  a.requested_at = now;
  a.signature = crypto::sign(params_, identity_.enc_keypair.secret, a.signing_bytes(), rng);
  return a;
}

MaskedIndexEntry Patient::derive_masked_entry(const AnchoredRecord& record, Rng& rng) {
  auto d = exchange::derive_masked_entry(params_, record.hospital_id, record.created_at,
                                         record.tx_id, record.key, rng);
  records_[d.entry.x_index] = AuthorizationPass{record.hospital_id, record.created_at, d.k_t};
  return d.entry;
}

std::pair<ReshareGrant, ledger::TxId> Patient::grant_access(
    const Digest& record_handle, const crypto::GroupPoint& grantee_tag_pub,
    const crypto::GroupPoint& grantee_pk_enc, Rng& rng, ledger::Ledger& ledger,
    std::uint64_t now) {
  auto it = records_.find(record_handle);
  if (it == records_.end()) {
    throw Error(ErrorCode::kUnknownRecord, "no k_t held for " + to_hex(record_handle.view()));
  }
  auto grant = make_grant(params_, grantee_tag_pub, grantee_pk_enc, it->second, rng);

  crypto::KeyPair sender = identity_.enc_keypair;
  if (options_.fresh_grant_accounts) {
    sender = crypto::keygen(params_, rng);
    ledger.create_account(sender.public_key);
  }
  auto id = ledger::send_transaction(ledger, sender, std::nullopt, grant.encode(), rng);
  ledger.confirm(id, now);
  return {std::move(grant), id};
}

std::optional<AuthorizationPass> Patient::pass_for(const Digest& record_handle) const {
  auto it = records_.find(record_handle);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

// --- Doctor ------------------------------------------------------------------

Doctor::Doctor(crypto::SystemParams params, registry::ParticipantIdentity identity,
               registry::DoctorEnrollment enrollment, crypto::GroupPoint ha_public_key)
    : params_(std::move(params)),
      identity_(std::move(identity)),
      enrollment_(std::move(enrollment)),
      ha_pk_(ha_public_key) {}

std::string Doctor::hospital_id() const {
  return registry::IdComponents{identity_.id.authority, identity_.id.hospital, ""}.id_string();
}

void Doctor::install_certificate(registry::Certificate cert) { cert_ = std::move(cert); }

AnchoredRecord Doctor::create_and_anchor_record(const Appointment& appointment,
                                                const registry::Registry& directory, Bytes body,
                                                std::string record_type, std::uint64_t now,
                                                Rng& rng, ledger::Ledger& ledger) {
  if (!cert_ || !registry::verify_certificate(params_, *cert_, ha_pk_, now)) {
    throw Error(ErrorCode::kNoCertificate, "doctor holds no currently valid certificate");
  }
  if (appointment.patient_pub.is_identity() ||
      !crypto::verify(params_, appointment.patient_pub, appointment.signing_bytes(),
                      appointment.signature) ||
      !directory.is_registered(ledger::address_of(params_, appointment.patient_pub),
                               registry::Role::kPatient)) {
    throw Error(ErrorCode::kUnregisteredParticipant, "appointment is not from a registered patient");
  }
  if (body.empty()) throw Error(ErrorCode::kEmptyRecord, "health record body is empty");

  AnchoredRecord out;
  out.key = crypto::random_symmetric_key(rng);
  out.encrypted.ciphertext = crypto::sym_encrypt(out.key, body, rng);
  out.encrypted.digest = crypto::h2_hash(params_, out.encrypted.ciphertext.bytes);
  out.created_at = now;
  out.record_type = std::move(record_type);
  out.hospital_id = hospital_id();

  AnchorRecord anchor{out.created_at, out.record_type, out.encrypted.digest};
  out.tx_id = ledger::send_transaction(ledger, identity_.enc_keypair, std::nullopt,
                                       anchor.encode(), rng);
  ledger.confirm(out.tx_id, now);
  return out;
}

AuthorizationPass Doctor::accept_grant(const ReshareGrant& grant) {
  return open_grant(params_, enrollment_.tag_secret, identity_.enc_keypair.secret, grant,
                    &decrypt_attempts_);
}

AccessRequest Doctor::build_access_request(const AuthorizationPass& pass, Rng& rng) {
  if (!cert_) throw Error(ErrorCode::kNoCertificate, "doctor holds no certificate");
  auto pads = derive_index_pads(params_, pass.hospital_id, pass.record_time, pass.k_t);
  AccessRequest req;
  req.w = pads.x;
  req.signature = crypto::sign(params_, identity_.enc_keypair.secret, req.w.view(), rng);
  req.cert = *cert_;
  pending_pads_[req.w] = pads.y;
  return req;
}

Bytes Doctor::recover_record(const Digest& w, const ReleasedRecord& release,
                             const ledger::Ledger& ledger) {
  auto it = pending_pads_.find(w);
  if (it == pending_pads_.end()) {
    throw Error(ErrorCode::kUnknownRecord, "no outstanding request for " + to_hex(w.view()));
  }
  auto body = exchange::recover_record(params_, release, it->second, ledger);
  pending_pads_.erase(it);
  return body;
}

}  // namespace ehr::exchange
