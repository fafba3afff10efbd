// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#include "tapfed/wire.hpp"

#include "tapfed/error.hpp"

namespace tapfed::wire {

namespace {

constexpr std::size_t field(std::size_t content) { return 4 + content; }
constexpr std::size_t record_header = 1 + 4;

}  // namespace

serial::Bytes pack(const Envelope& envelope) {
  serial::Bytes out;
  out.push_back(static_cast<char>(envelope.kind));
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<char>((envelope.round_index >> shift) & 0xff));
  }
  std::uint32_t sender_len = static_cast<std::uint32_t>(envelope.sender.size());
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<char>((sender_len >> shift) & 0xff));
  }
  out += envelope.sender;
  out += envelope.payload;
  return out;
}

Envelope unpack(const serial::Bytes& bytes) {
  if (bytes.size() < 13) fail(Errc::parse_error, "short envelope");
  Envelope env;
  std::uint8_t kind = static_cast<std::uint8_t>(bytes[0]);
  if (kind < 1 || kind > 5) fail(Errc::parse_error, "unknown message kind");
  env.kind = static_cast<MessageKind>(kind);
  for (std::size_t i = 1; i <= 8; ++i) {
    env.round_index = (env.round_index << 8) | static_cast<std::uint8_t>(bytes[i]);
  }
  std::uint32_t sender_len = 0;
  for (std::size_t i = 9; i < 13; ++i) {
    sender_len = (sender_len << 8) | static_cast<std::uint8_t>(bytes[i]);
  }
  if (bytes.size() < 13 + static_cast<std::size_t>(sender_len)) {
    fail(Errc::parse_error, "truncated envelope sender");
  }
  env.sender = bytes.substr(13, sender_len);
  env.payload = bytes.substr(13 + sender_len);
  return env;
}

std::size_t envelope_overhead(std::size_t sender_len) { return 1 + 8 + 4 + sender_len; }

std::size_t round_label_size(std::size_t scope_len, bool scoped) {
  return scoped ? 8 + 1 + 4 + scope_len : 8 + 1;
}

std::size_t ciphertext_record_size(std::size_t eta, std::size_t label_len,
                                   std::size_t element_bytes) {
  return record_header + field(4) + field(label_len) + field(4) +
         (eta + 1) * field(element_bytes);
}

std::size_t protected_update_record_size(std::size_t eta, std::size_t label_len,
                                         std::size_t party_id_len, std::size_t element_bytes) {
  return record_header + field(party_id_len) + field(label_len) +
         field(ciphertext_record_size(eta, label_len, element_bytes)) + field(8) + field(1);
}

std::size_t protected_update_wire_size(std::size_t eta, std::size_t label_len,
                                       std::size_t party_id_len, std::size_t element_bytes) {
  return envelope_overhead(party_id_len) +
         protected_update_record_size(eta, label_len, party_id_len, element_bytes);
}

std::size_t partial_record_size(std::size_t n_active, std::size_t label_len,
                                std::size_t element_bytes) {
  return record_header + field(4) + field(label_len) + field(4) +
         (n_active + 2) * field(element_bytes);
}

std::size_t fusion_record_size(std::size_t n_active, std::size_t label_len,
                               std::size_t ids_total_len) {
  return record_header + field(label_len) + field(4) + field(4) + n_active * (field(8) + field(8)) +
         n_active * 4 + ids_total_len;
}

std::size_t model_partial_record_size(std::size_t coords, std::size_t n_active,
                                      std::size_t label_len, std::size_t aggregator_id_len,
                                      std::size_t ids_total_len, std::size_t element_bytes) {
  return record_header + field(aggregator_id_len) + field(4) + field(label_len) +
         field(fusion_record_size(n_active, label_len, ids_total_len)) + field(4) +
         coords * field(partial_record_size(n_active, label_len, element_bytes));
}

}  // namespace tapfed::wire
