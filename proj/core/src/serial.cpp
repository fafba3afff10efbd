// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#include "tapfed/serial.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "tapfed/error.hpp"

namespace tapfed::serial {

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<char>((v >> shift) & 0xff));
  }
}

Bytes be32(std::uint32_t v) {
  Bytes out;
  put_u32(out, v);
  return out;
}

Bytes be64(std::uint64_t v) {
  Bytes out;
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<char>((v >> shift) & 0xff));
  }
  return out;
}

Bytes double_bits(double v) {
  std::uint64_t bits = 0;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(bits));
  return be64(bits);
}

class RecordWriter {
 public:
  explicit RecordWriter(std::uint8_t tag) : tag_(tag) {}

  void raw(const Bytes& bytes) { fields_.push_back(bytes); }
  void raw(std::string_view bytes) { fields_.emplace_back(bytes); }
  void u32(std::uint32_t v) { fields_.push_back(be32(v)); }
  void u64(std::uint64_t v) { fields_.push_back(be64(v)); }
  void u8(std::uint8_t v) { fields_.push_back(Bytes(1, static_cast<char>(v))); }
  void f64(double v) { fields_.push_back(double_bits(v)); }
  void scalar(const mpz_class& v, std::size_t width) {
    fields_.push_back(to_bytes_padded(v, width));
  }

  Bytes finish() const {
    Bytes out;
    out.push_back(static_cast<char>(tag_));
    put_u32(out, static_cast<std::uint32_t>(fields_.size()));
    for (const Bytes& field : fields_) {
      put_u32(out, static_cast<std::uint32_t>(field.size()));
      out += field;
    }
    return out;
  }

 private:
  std::uint8_t tag_;
  std::vector<Bytes> fields_;
};

class RecordReader {
 public:
  RecordReader(const Bytes& data, std::uint8_t expected_tag) {
    std::size_t pos = 0;
    auto need = [&](std::size_t count) {
      if (pos + count > data.size()) fail(Errc::parse_error, "truncated record");
    };
    need(5);
    if (static_cast<std::uint8_t>(data[0]) != expected_tag) {
      fail(Errc::parse_error, "unexpected record tag");
    }
    pos = 1;
    std::uint32_t count = read_u32_at(data, pos);
    pos += 4;
    fields_.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      need(4);
      std::uint32_t len = read_u32_at(data, pos);
      pos += 4;
      need(len);
      fields_.emplace_back(data.substr(pos, len));
      pos += len;
    }
    if (pos != data.size()) fail(Errc::parse_error, "trailing bytes after record");
  }

  std::size_t size() const { return fields_.size(); }

  const Bytes& raw(std::size_t i) const {
    if (i >= fields_.size()) fail(Errc::parse_error, "field index out of range");
    return fields_[i];
  }

  std::uint32_t u32(std::size_t i) const {
    const Bytes& f = raw(i);
    if (f.size() != 4) fail(Errc::parse_error, "bad u32 field width");
    return read_u32_at(f, 0);
  }

  std::uint64_t u64(std::size_t i) const {
    const Bytes& f = raw(i);
    if (f.size() != 8) fail(Errc::parse_error, "bad u64 field width");
    std::uint64_t v = 0;
    for (char c : f) v = (v << 8) | static_cast<std::uint8_t>(c);
    return v;
  }

  std::uint8_t u8(std::size_t i) const {
    const Bytes& f = raw(i);
    if (f.size() != 1) fail(Errc::parse_error, "bad u8 field width");
    return static_cast<std::uint8_t>(f[0]);
  }

  double f64(std::size_t i) const {
    std::uint64_t bits = u64(i);
    double v = 0;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }

  mpz_class scalar(std::size_t i) const { return from_bytes(raw(i)); }

  static std::uint32_t read_u32_at(const Bytes& data, std::size_t pos) {
    std::uint32_t v = 0;
    for (std::size_t k = 0; k < 4; ++k) v = (v << 8) | static_cast<std::uint8_t>(data[pos + k]);
    return v;
  }

 private:
  std::vector<Bytes> fields_;
};

}  // namespace

// PublicParams: q, p, g, lambda, t, s, n, eta_1..eta_n, hash_id.
Bytes encode(const tmcfe::PublicParams& pp) {
  RecordWriter w(kTagPublicParams);
  w.raw(to_bytes(pp.group.modulus_q));
  w.raw(to_bytes(pp.group.order_p));
  w.raw(to_bytes(pp.group.generator_g));
  w.u32(pp.group.lambda_bits);
  w.u32(pp.threshold_t);
  w.u32(pp.share_count_s);
  w.u32(pp.client_count_n);
  for (unsigned len : pp.vector_lengths) w.u32(len);
  w.raw(pp.hash_id);
  return w.finish();
}

tmcfe::PublicParams decode_public_params(const Bytes& bytes) {
  RecordReader r(bytes, kTagPublicParams);
  tmcfe::PublicParams pp;
  pp.group.modulus_q = r.scalar(0);
  pp.group.order_p = r.scalar(1);
  pp.group.generator_g = r.scalar(2);
  pp.group.lambda_bits = r.u32(3);
  pp.threshold_t = r.u32(4);
  pp.share_count_s = r.u32(5);
  pp.client_count_n = r.u32(6);
  if (r.size() != 8 + pp.client_count_n) fail(Errc::parse_error, "bad public-params arity");
  pp.vector_lengths.resize(pp.client_count_n);
  for (unsigned i = 0; i < pp.client_count_n; ++i) pp.vector_lengths[i] = r.u32(7 + i);
  pp.hash_id = r.raw(7 + pp.client_count_n);
  return pp;
}

// MasterSecretKey: pp, eta_total, alpha..., alpha_sum, g_alpha...,
// then W rows, U rows, masked-base rows, flattened in client order.
Bytes encode(const tmcfe::MasterSecretKey& msk, const tmcfe::PublicParams& pp) {
  const std::size_t wp = pp.group.scalar_bytes();
  const std::size_t wq = pp.group.element_bytes();
  RecordWriter w(kTagMasterSecretKey);
  w.raw(encode(pp));
  w.u32(static_cast<std::uint32_t>(msk.alpha.size()));
  for (const auto& v : msk.alpha) w.scalar(v, wp);
  w.scalar(msk.alpha_sum_A, wp);
  for (const auto& v : msk.g_alpha) w.scalar(v, wq);
  for (const auto& row : msk.W)
    for (const auto& v : row) w.scalar(v, wp);
  for (const auto& row : msk.U)
    for (const auto& v : row) w.scalar(v, wp);
  for (const auto& row : msk.masked_bases)
    for (const auto& v : row) w.scalar(v, wq);
  return w.finish();
}

tmcfe::MasterSecretKey decode_master_secret_key(const Bytes& bytes, tmcfe::PublicParams* pp_out) {
  RecordReader r(bytes, kTagMasterSecretKey);
  tmcfe::PublicParams pp = decode_public_params(r.raw(0));
  if (pp_out) *pp_out = pp;
  tmcfe::MasterSecretKey msk;
  std::size_t at = 1;
  std::uint32_t alpha_count = r.u32(at++);
  msk.alpha.resize(alpha_count);
  for (auto& v : msk.alpha) v = r.scalar(at++);
  msk.alpha_sum_A = r.scalar(at++);
  msk.g_alpha.resize(alpha_count);
  for (auto& v : msk.g_alpha) v = r.scalar(at++);
  auto read_rows = [&](std::vector<std::vector<mpz_class>>& rows) {
    rows.resize(pp.client_count_n);
    for (unsigned i = 0; i < pp.client_count_n; ++i) {
      rows[i].resize(pp.vector_lengths[i]);
      for (auto& v : rows[i]) v = r.scalar(at++);
    }
  };
  read_rows(msk.W);
  read_rows(msk.U);
  read_rows(msk.masked_bases);
  if (at != r.size()) fail(Errc::parse_error, "bad master-key arity");
  return msk;
}

// PartySecretKey: pp, client_index, g_alpha count, g_alpha...,
// masked bases (eta_i), U row (eta_i).
Bytes encode(const tmcfe::PartySecretKey& sk) {
  const std::size_t wp = sk.pp.group.scalar_bytes();
  const std::size_t wq = sk.pp.group.element_bytes();
  RecordWriter w(kTagPartySecretKey);
  w.raw(encode(sk.pp));
  w.u32(sk.client_index);
  w.u32(static_cast<std::uint32_t>(sk.g_alpha.size()));
  for (const auto& v : sk.g_alpha) w.scalar(v, wq);
  for (const auto& v : sk.masked_bases) w.scalar(v, wq);
  for (const auto& v : sk.u_row) w.scalar(v, wp);
  return w.finish();
}

tmcfe::PartySecretKey decode_party_secret_key(const Bytes& bytes) {
  RecordReader r(bytes, kTagPartySecretKey);
  tmcfe::PartySecretKey sk;
  sk.pp = decode_public_params(r.raw(0));
  sk.client_index = r.u32(1);
  if (sk.client_index < 1 || sk.client_index > sk.pp.client_count_n) {
    fail(Errc::parse_error, "party key client index out of range");
  }
  std::size_t at = 2;
  std::uint32_t alpha_count = r.u32(at++);
  sk.g_alpha.resize(alpha_count);
  for (auto& v : sk.g_alpha) v = r.scalar(at++);
  const unsigned eta_i = sk.pp.vector_lengths[sk.client_index - 1];
  sk.masked_bases.resize(eta_i);
  for (auto& v : sk.masked_bases) v = r.scalar(at++);
  sk.u_row.resize(eta_i);
  for (auto& v : sk.u_row) v = r.scalar(at++);
  if (at != r.size()) fail(Errc::parse_error, "bad party-key arity");
  return sk;
}

// FunctionalKeyShare: share_index, label, n, v0, v1..., eta, y...
Bytes encode(const tmcfe::FunctionalKeyShare& share, const GroupParams& group) {
  const std::size_t wp = group.scalar_bytes();
  RecordWriter w(kTagFunctionalKeyShare);
  w.u32(share.share_index);
  w.raw(share.label);
  w.u32(static_cast<std::uint32_t>(share.v1.size()));
  w.scalar(share.v0, wp);
  for (const auto& v : share.v1) w.scalar(v, wp);
  w.u32(static_cast<std::uint32_t>(share.weight_vector.size()));
  for (const auto& v : share.weight_vector) w.scalar(v, wp);
  return w.finish();
}

tmcfe::FunctionalKeyShare decode_functional_key_share(const Bytes& bytes) {
  RecordReader r(bytes, kTagFunctionalKeyShare);
  tmcfe::FunctionalKeyShare share;
  share.share_index = r.u32(0);
  share.label = r.raw(1);
  std::uint32_t n = r.u32(2);
  std::size_t at = 3;
  share.v0 = r.scalar(at++);
  share.v1.resize(n);
  for (auto& v : share.v1) v = r.scalar(at++);
  std::uint32_t eta = r.u32(at++);
  share.weight_vector.resize(eta);
  for (auto& v : share.weight_vector) v = r.scalar(at++);
  if (at != r.size()) fail(Errc::parse_error, "bad key-share arity");
  return share;
}

// Ciphertext: client_index, label, eta, ct0..., ct1.
Bytes encode(const tmcfe::Ciphertext& ct, const GroupParams& group) {
  const std::size_t wq = group.element_bytes();
  RecordWriter w(kTagCiphertext);
  w.u32(ct.client_index);
  w.raw(ct.label);
  w.u32(static_cast<std::uint32_t>(ct.ct0.size()));
  for (const auto& v : ct.ct0) w.scalar(v, wq);
  w.scalar(ct.ct1, wq);
  return w.finish();
}

tmcfe::Ciphertext decode_ciphertext(const Bytes& bytes) {
  RecordReader r(bytes, kTagCiphertext);
  tmcfe::Ciphertext ct;
  ct.client_index = r.u32(0);
  ct.label = r.raw(1);
  std::uint32_t eta = r.u32(2);
  if (r.size() != 4 + static_cast<std::size_t>(eta)) fail(Errc::parse_error, "bad ciphertext arity");
  ct.ct0.resize(eta);
  for (std::uint32_t k = 0; k < eta; ++k) ct.ct0[k] = r.scalar(3 + k);
  ct.ct1 = r.scalar(3 + eta);
  return ct;
}

// PartialDecryption: share_index, label, ct0_agg, n, ct1_shares..., ct2.
Bytes encode(const tmcfe::PartialDecryption& partial, const GroupParams& group) {
  const std::size_t wq = group.element_bytes();
  RecordWriter w(kTagPartialDecryption);
  w.u32(partial.share_index);
  w.raw(partial.label);
  w.scalar(partial.ct0_agg, wq);
  w.u32(static_cast<std::uint32_t>(partial.ct1_shares.size()));
  for (const auto& v : partial.ct1_shares) w.scalar(v, wq);
  w.scalar(partial.ct2_share, wq);
  return w.finish();
}

tmcfe::PartialDecryption decode_partial_decryption(const Bytes& bytes) {
  RecordReader r(bytes, kTagPartialDecryption);
  tmcfe::PartialDecryption partial;
  partial.share_index = r.u32(0);
  partial.label = r.raw(1);
  partial.ct0_agg = r.scalar(2);
  std::uint32_t n = r.u32(3);
  if (r.size() != 5 + static_cast<std::size_t>(n)) fail(Errc::parse_error, "bad partial arity");
  partial.ct1_shares.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) partial.ct1_shares[i] = r.scalar(4 + i);
  partial.ct2_share = r.scalar(4 + n);
  return partial;
}

// FusionSpec: label, prw, count, then (id, scaled weight, float weight)
// per active party.
Bytes encode(const codec::FusionSpec& fusion) {
  RecordWriter w(kTagFusionSpec);
  w.raw(fusion.label);
  w.u32(static_cast<std::uint32_t>(fusion.weight_scale_prw));
  w.u32(static_cast<std::uint32_t>(fusion.party_ids.size()));
  for (std::size_t i = 0; i < fusion.party_ids.size(); ++i) {
    w.raw(fusion.party_ids[i]);
    w.u64(static_cast<std::uint64_t>(fusion.scaled_weights[i]));
    w.f64(fusion.weights[i]);
  }
  return w.finish();
}

codec::FusionSpec decode_fusion_spec(const Bytes& bytes) {
  RecordReader r(bytes, kTagFusionSpec);
  codec::FusionSpec fusion;
  fusion.label = r.raw(0);
  fusion.weight_scale_prw = static_cast<int>(r.u32(1));
  std::uint32_t count = r.u32(2);
  if (r.size() != 3 + 3 * static_cast<std::size_t>(count)) {
    fail(Errc::parse_error, "bad fusion-spec arity");
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    fusion.party_ids.push_back(r.raw(3 + 3 * i));
    fusion.scaled_weights.push_back(static_cast<std::int64_t>(r.u64(4 + 3 * i)));
    fusion.weights.push_back(r.f64(5 + 3 * i));
  }
  return fusion;
}

// ProtectedUpdate: party_id, label, ciphertext record, sample_count, dp flag.
Bytes encode(const tdsa::ProtectedUpdate& update, const GroupParams& group) {
  RecordWriter w(kTagProtectedUpdate);
  w.raw(update.party_id);
  w.raw(update.label.bytes());
  w.raw(encode(update.ciphertext, group));
  w.u64(update.sample_count);
  w.u8(update.dp_applied ? 1 : 0);
  return w.finish();
}

namespace {

tdsa::RoundLabel parse_round_label(const Bytes& canonical) {
  if (canonical.size() < 9) fail(Errc::parse_error, "short round label");
  std::uint64_t round = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    round = (round << 8) | static_cast<std::uint8_t>(canonical[i]);
  }
  tdsa::RoundLabel label;
  label.round_index = round;
  std::uint8_t flag = static_cast<std::uint8_t>(canonical[8]);
  if (flag == 0) {
    if (canonical.size() != 9) fail(Errc::parse_error, "trailing label bytes");
  } else if (flag == 1) {
    if (canonical.size() < 13) fail(Errc::parse_error, "short scoped label");
    std::uint32_t len = RecordReader::read_u32_at(canonical, 9);
    if (canonical.size() != 13 + static_cast<std::size_t>(len)) {
      fail(Errc::parse_error, "bad scoped label length");
    }
    label.scope = canonical.substr(13, len);
  } else {
    fail(Errc::parse_error, "unknown label flag");
  }
  return label;
}

}  // namespace

tdsa::ProtectedUpdate decode_protected_update(const Bytes& bytes) {
  RecordReader r(bytes, kTagProtectedUpdate);
  if (r.size() != 5) fail(Errc::parse_error, "bad protected-update arity");
  tdsa::ProtectedUpdate update;
  update.party_id = r.raw(0);
  update.label = parse_round_label(r.raw(1));
  update.ciphertext = decode_ciphertext(r.raw(2));
  update.sample_count = r.u64(3);
  update.dp_applied = r.u8(4) != 0;
  return update;
}

// DkRequest: aggregator_id, label, fusion record.
Bytes encode(const tdsa::DkRequest& request) {
  RecordWriter w(kTagDkRequest);
  w.raw(request.aggregator_id);
  w.raw(request.label.bytes());
  w.raw(encode(request.fusion));
  return w.finish();
}

tdsa::DkRequest decode_dk_request(const Bytes& bytes) {
  RecordReader r(bytes, kTagDkRequest);
  if (r.size() != 3) fail(Errc::parse_error, "bad dk-request arity");
  tdsa::DkRequest request;
  request.aggregator_id = r.raw(0);
  request.label = parse_round_label(r.raw(1));
  request.fusion = decode_fusion_spec(r.raw(2));
  return request;
}

// KeyGrant: aggregator_id, label, fusion, coordinate count, share records.
Bytes encode(const tdsa::KeyGrant& grant, const GroupParams& group) {
  RecordWriter w(kTagKeyGrant);
  w.raw(grant.aggregator_id);
  w.raw(grant.label.bytes());
  w.raw(encode(grant.fusion));
  w.u32(static_cast<std::uint32_t>(grant.coordinate_shares.size()));
  for (const auto& share : grant.coordinate_shares) w.raw(encode(share, group));
  return w.finish();
}

tdsa::KeyGrant decode_key_grant(const Bytes& bytes) {
  RecordReader r(bytes, kTagKeyGrant);
  tdsa::KeyGrant grant;
  grant.aggregator_id = r.raw(0);
  grant.label = parse_round_label(r.raw(1));
  grant.fusion = decode_fusion_spec(r.raw(2));
  std::uint32_t count = r.u32(3);
  if (r.size() != 4 + static_cast<std::size_t>(count)) fail(Errc::parse_error, "bad grant arity");
  grant.coordinate_shares.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    grant.coordinate_shares.push_back(decode_functional_key_share(r.raw(4 + k)));
  }
  return grant;
}

// ModelPartial: aggregator_id, share_index, label, fusion, coordinate
// count, partial-decryption records.
Bytes encode(const tdsa::ModelPartial& partial, const GroupParams& group) {
  RecordWriter w(kTagModelPartial);
  w.raw(partial.aggregator_id);
  w.u32(partial.share_index);
  w.raw(partial.label.bytes());
  w.raw(encode(partial.fusion));
  w.u32(static_cast<std::uint32_t>(partial.coords.size()));
  for (const auto& coord : partial.coords) w.raw(encode(coord, group));
  return w.finish();
}

tdsa::ModelPartial decode_model_partial(const Bytes& bytes) {
  RecordReader r(bytes, kTagModelPartial);
  tdsa::ModelPartial partial;
  partial.aggregator_id = r.raw(0);
  partial.share_index = r.u32(1);
  partial.label = parse_round_label(r.raw(2));
  partial.fusion = decode_fusion_spec(r.raw(3));
  std::uint32_t count = r.u32(4);
  if (r.size() != 5 + static_cast<std::size_t>(count)) fail(Errc::parse_error, "bad partial arity");
  partial.coords.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    partial.coords.push_back(decode_partial_decryption(r.raw(5 + k)));
  }
  return partial;
}

std::string hex_encode(const Bytes& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (char c : bytes) {
    auto b = static_cast<std::uint8_t>(c);
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

Bytes hex_decode(const std::string& hex) {
  if (hex.size() % 2 != 0) fail(Errc::parse_error, "odd hex length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    fail(Errc::parse_error, "bad hex digit");
  };
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    out.push_back(static_cast<char>((nibble(hex[i]) << 4) | nibble(hex[i + 1])));
  }
  return out;
}

std::string to_debug_hex(const Bytes& record) {
  if (record.size() < 5) fail(Errc::parse_error, "record too short");
  std::uint8_t tag = static_cast<std::uint8_t>(record[0]);
  RecordReader r(record, tag);
  std::ostringstream out;
  out << "tag=" << hex_encode(Bytes(1, static_cast<char>(tag))) << " fields=" << r.size() << '\n';
  for (std::size_t i = 0; i < r.size(); ++i) {
    out << 'f' << i << '=' << hex_encode(r.raw(i)) << '\n';
  }
  return out.str();
}

}  // namespace tapfed::serial
