#include "ehr/messages.hpp"

#include "ehr/error.hpp"

namespace ehr::exchange {

namespace {
void expect_kind(ByteReader& r, PayloadKind kind, const char* name) {
  if (r.u8() != static_cast<std::uint8_t>(kind)) {
    throw Error(ErrorCode::kMalformedEncoding, std::string("not a ") + name + " payload");
  }
}
}  // namespace

std::optional<PayloadKind> payload_kind(ByteView payload) {
  if (payload.empty()) return std::nullopt;
  switch (payload[0]) {
    case 0x01: return PayloadKind::kAnchor;
    case 0x02: return PayloadKind::kGrant;
    case 0x03: return PayloadKind::kTombstone;
    default: return std::nullopt;
  }
}

Bytes AnchorRecord::encode() const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(PayloadKind::kAnchor)).u64(created_at).str16(record_type).raw(
      digest.view());
  return std::move(w).take();
}

AnchorRecord AnchorRecord::decode(ByteView payload) {
  ByteReader r(payload);
  expect_kind(r, PayloadKind::kAnchor, "anchor");
  AnchorRecord a;
  a.created_at = r.u64();
  a.record_type = r.str16();
  a.digest.bytes = r.fixed<crypto::kDigestSize>();
  r.expect_end();
  return a;
}

Bytes ReshareGrant::encode() const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(PayloadKind::kGrant))
      .raw(view(r_point.compressed()))
      .raw(view(tag.compressed()))
      .blob32(c1.bytes);
  return std::move(w).take();
}

ReshareGrant ReshareGrant::decode(const crypto::SystemParams& params, ByteView payload) {
  ByteReader r(payload);
  expect_kind(r, PayloadKind::kGrant, "grant");
  ReshareGrant g;
  g.r_point = crypto::decode_point(params, r.raw(crypto::kPointSize));
  g.tag = crypto::decode_point(params, r.raw(crypto::kPointSize));
  g.c1.bytes = r.blob32();
  r.expect_end();
  return g;
}

Bytes Tombstone::encode() const {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(PayloadKind::kTombstone)).raw(digest.view());
  return std::move(w).take();
}

Tombstone Tombstone::decode(ByteView payload) {
  ByteReader r(payload);
  expect_kind(r, PayloadKind::kTombstone, "tombstone");
  Tombstone t;
  t.digest.bytes = r.fixed<crypto::kDigestSize>();
  r.expect_end();
  return t;
}

Bytes AuthorizationPass::encode() const {
  ByteWriter w;
  w.str16(hospital_id).u64(record_time).raw(view(k_t));
  return std::move(w).take();
}

AuthorizationPass AuthorizationPass::decode(ByteView bytes) {
  ByteReader r(bytes);
  AuthorizationPass p;
  p.hospital_id = r.str16();
  p.record_time = r.u64();
  p.k_t = r.fixed<kPatientNonceSize>();
  r.expect_end();
  return p;
}

Bytes MaskedIndexEntry::encode() const {
  ByteWriter w;
  w.raw(x_index.view()).blob32(z_masked_txid).blob32(k_masked_key);
  return std::move(w).take();
}

MaskedIndexEntry MaskedIndexEntry::decode(ByteView bytes) {
  ByteReader r(bytes);
  MaskedIndexEntry e;
  e.x_index.bytes = r.fixed<crypto::kDigestSize>();
  e.z_masked_txid = r.blob32();
  e.k_masked_key = r.blob32();
  r.expect_end();
  return e;
}

Bytes AccessRequest::encode() const {
  ByteWriter w;
  w.raw(this->w.view()).blob32(signature.bytes).blob32(cert.encode());
  return std::move(w).take();
}

AccessRequest AccessRequest::decode(const crypto::SystemParams& params, ByteView bytes) {
  ByteReader r(bytes);
  AccessRequest req;
  req.w.bytes = r.fixed<crypto::kDigestSize>();
  req.signature.bytes = r.blob32();
  req.cert = registry::Certificate::decode(params, r.blob32());
  r.expect_end();
  return req;
}

Bytes ReleasedRecord::encode() const {
  ByteWriter w;
  w.blob32(z_masked_txid).blob32(k_masked_key).blob32(chr.bytes);
  return std::move(w).take();
}

ReleasedRecord ReleasedRecord::decode(ByteView bytes) {
  ByteReader r(bytes);
  ReleasedRecord rel;
  rel.z_masked_txid = r.blob32();
  rel.k_masked_key = r.blob32();
  rel.chr.bytes = r.blob32();
  r.expect_end();
  return rel;
}

Bytes Appointment::signing_bytes() const {
  ByteWriter w;
  w.raw(to_bytes("ehr-appointment")).raw(patient_pub.encode()).u64(requested_at);
  return std::move(w).take();
}

Bytes Appointment::encode() const {
  ByteWriter w;
  w.raw(patient_pub.encode()).u64(requested_at).blob32(signature.bytes);
  return std::move(w).take();
}

Bytes index_message(const std::string& hospital_id, std::uint64_t record_time,
                    std::uint8_t domain) {
  ByteWriter w;
  w.str16(hospital_id).u64(record_time).u8(domain);
  return std::move(w).take();
}

}  // namespace ehr::exchange
