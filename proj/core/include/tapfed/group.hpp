// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "tapfed/bigint.hpp"
#include "tapfed/rng.hpp"

namespace tapfed {

// Schnorr group: the quadratic-residue subgroup of Z_q* for a safe prime
// q = 2p + 1. The subgroup has prime order p, which is what the whole
// scheme does exponent arithmetic in.
struct GroupParams {
  mpz_class modulus_q;
  mpz_class order_p;
  mpz_class generator_g;
  unsigned lambda_bits = 0;

  // Membership in the order-p subgroup: x in [1, q-1] and x^p = 1.
  bool is_element(const mpz_class& x) const;
  bool valid() const;

  std::size_t scalar_bytes() const;   // ceil(bits(p) / 8)
  std::size_t element_bytes() const;  // ceil(bits(q) / 8)

  // Text form: one tag line, then q, p, g, lambda_bits as decimal lines.
  std::string to_text() const;
  static GroupParams from_text(const std::string& text);

  bool operator==(const GroupParams&) const = default;
};

inline constexpr const char* kGroupFormatTag = "tapfed-group-v1";

// Generates a fresh group with a lambda_bits-bit order p. Throws
// Errc::generation_timeout if the candidate budget runs out.
GroupParams gen_group(unsigned lambda_bits, std::optional<std::uint64_t> seed = std::nullopt);
GroupParams gen_group(unsigned lambda_bits, Rng& rng);

// base^exponent mod q. The exponent is reduced mod p first (the subgroup
// has order p, so this is the natural exponent domain).
mpz_class mod_exp(const mpz_class& base, const mpz_class& exponent, const GroupParams& params);

mpz_class mod_mul(const mpz_class& a, const mpz_class& b, const GroupParams& params);
mpz_class mod_inverse(const mpz_class& a, const GroupParams& params);  // mod q
mpz_class scalar_inverse(const mpz_class& a, const GroupParams& params);  // mod p

inline mpz_class reduce_scalar(const mpz_class& v, const GroupParams& params) {
  mpz_class r;
  mpz_mod(r.get_mpz_t(), v.get_mpz_t(), params.order_p.get_mpz_t());
  return r;
}

}  // namespace tapfed
