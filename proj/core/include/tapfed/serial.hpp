// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <cstdint>
#include <string>

#include "tapfed/tdsa.hpp"
#include "tapfed/tmcfe.hpp"

namespace tapfed::serial {

// Tagged, length-prefixed binary layout shared by every key, ciphertext
// and protocol record: 1-byte type tag, 4-byte big-endian field count,
// then fields as 4-byte-length-prefixed big-endian integer byte strings.
// Labels and identifiers ride as raw UTF-8 fields. Scalars pad to the
// byte width of p and group elements to the width of q, so wire sizes are
// input-independent.
using Bytes = std::string;

enum : std::uint8_t {
  kTagPublicParams = 0x01,
  kTagMasterSecretKey = 0x02,
  kTagPartySecretKey = 0x03,
  kTagFunctionalKeyShare = 0x04,
  kTagCiphertext = 0x05,
  kTagPartialDecryption = 0x06,
  kTagFusionSpec = 0x07,
  kTagProtectedUpdate = 0x08,
  kTagDkRequest = 0x09,
  kTagKeyGrant = 0x0a,
  kTagModelPartial = 0x0b,
};

Bytes encode(const tmcfe::PublicParams& pp);
Bytes encode(const tmcfe::MasterSecretKey& msk, const tmcfe::PublicParams& pp);
Bytes encode(const tmcfe::PartySecretKey& sk);
Bytes encode(const tmcfe::FunctionalKeyShare& share, const GroupParams& group);
Bytes encode(const tmcfe::Ciphertext& ct, const GroupParams& group);
Bytes encode(const tmcfe::PartialDecryption& partial, const GroupParams& group);
Bytes encode(const codec::FusionSpec& fusion);
Bytes encode(const tdsa::ProtectedUpdate& update, const GroupParams& group);
Bytes encode(const tdsa::DkRequest& request);
Bytes encode(const tdsa::KeyGrant& grant, const GroupParams& group);
Bytes encode(const tdsa::ModelPartial& partial, const GroupParams& group);

tmcfe::PublicParams decode_public_params(const Bytes& bytes);
tmcfe::MasterSecretKey decode_master_secret_key(const Bytes& bytes, tmcfe::PublicParams* pp_out = nullptr);
tmcfe::PartySecretKey decode_party_secret_key(const Bytes& bytes);
tmcfe::FunctionalKeyShare decode_functional_key_share(const Bytes& bytes);
tmcfe::Ciphertext decode_ciphertext(const Bytes& bytes);
tmcfe::PartialDecryption decode_partial_decryption(const Bytes& bytes);
codec::FusionSpec decode_fusion_spec(const Bytes& bytes);
tdsa::ProtectedUpdate decode_protected_update(const Bytes& bytes);
tdsa::DkRequest decode_dk_request(const Bytes& bytes);
tdsa::KeyGrant decode_key_grant(const Bytes& bytes);
tdsa::ModelPartial decode_model_partial(const Bytes& bytes);

// Text (hex) debug form mirroring the binary layout field-for-field:
// one header line with tag and field count, one hex line per field.
std::string to_debug_hex(const Bytes& record);

std::string hex_encode(const Bytes& bytes);
Bytes hex_decode(const std::string& hex);

}  // namespace tapfed::serial
