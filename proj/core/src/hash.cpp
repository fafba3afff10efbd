// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#include "tapfed/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

#include "tapfed/error.hpp"

namespace tapfed {

namespace {

std::array<unsigned char, 32> sha256(std::string_view data) {
  std::array<unsigned char, 32> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != digest.size()) {
    throw std::runtime_error("sha256: digest failure");
  }
  return digest;
}

}  // namespace

mpz_class hash_to_scalar(std::string_view label, const GroupParams& params) {
  if (label.empty()) fail(Errc::invalid_label, "label must be non-empty");

  // Expand to 128 bits beyond |p| so the mod-(p-1) reduction bias is
  // negligible, then shift into [1, p-1].
  const std::size_t want_bits = mpz_sizeinbase(params.order_p.get_mpz_t(), 2) + 128;
  const std::size_t blocks = (want_bits + 255) / 256;

  mpz_class acc = 0;
  for (std::size_t i = 0; i < blocks; ++i) {
    std::string block_input;
    block_input.reserve(label.size() + 16);
    block_input += "tapfed-h2s";
    for (int shift = 24; shift >= 0; shift -= 8) {
      block_input.push_back(static_cast<char>((i >> shift) & 0xff));
    }
    block_input.append(label.data(), label.size());
    auto digest = sha256(block_input);
    for (unsigned char byte : digest) {
      acc <<= 8;
      acc |= mpz_class(static_cast<unsigned long>(byte));
    }
  }

  mpz_class span = params.order_p - 1;
  mpz_class r;
  mpz_mod(r.get_mpz_t(), acc.get_mpz_t(), span.get_mpz_t());
  return r + 1;
}

}  // namespace tapfed
