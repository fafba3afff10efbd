// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <cstdint>
#include <string>

#include "tapfed/serial.hpp"

namespace tapfed::wire {

// Transport envelope: 1-byte message kind, 8-byte big-endian round index,
// length-prefixed UTF-8 sender id, then the payload record.
enum class MessageKind : std::uint8_t {
  ProtectedUpdate = 1,
  DkRequest = 2,
  DkGrant = 3,
  Partial = 4,
  Abort = 5,
};

struct Envelope {
  MessageKind kind = MessageKind::Abort;
  std::uint64_t round_index = 0;
  std::string sender;
  serial::Bytes payload;
};

serial::Bytes pack(const Envelope& envelope);
Envelope unpack(const serial::Bytes& bytes);

// Closed-form wire sizes, used by the payload accounting checks. Every
// scalar pads to the width of p and every element to the width of q, so
// these are exact for any inputs of the given shape.
std::size_t envelope_overhead(std::size_t sender_len);
std::size_t round_label_size(std::size_t scope_len, bool scoped);
std::size_t ciphertext_record_size(std::size_t eta, std::size_t label_len,
                                   std::size_t element_bytes);
std::size_t protected_update_record_size(std::size_t eta, std::size_t label_len,
                                         std::size_t party_id_len, std::size_t element_bytes);
std::size_t protected_update_wire_size(std::size_t eta, std::size_t label_len,
                                       std::size_t party_id_len, std::size_t element_bytes);
std::size_t partial_record_size(std::size_t n_active, std::size_t label_len,
                                std::size_t element_bytes);
std::size_t fusion_record_size(std::size_t n_active, std::size_t label_len,
                               std::size_t ids_total_len);
std::size_t model_partial_record_size(std::size_t coords, std::size_t n_active,
                                      std::size_t label_len, std::size_t aggregator_id_len,
                                      std::size_t ids_total_len, std::size_t element_bytes);

}  // namespace tapfed::wire
