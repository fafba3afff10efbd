// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#include "tapfed/rng.hpp"

#include <random>
#include <stdexcept>

#include "tapfed/bigint.hpp"

namespace tapfed {

namespace {

mpz_class entropy_seed() {
  std::random_device rd;
  mpz_class seed = 0;
  for (int i = 0; i < 4; ++i) {
    seed <<= 32;
    seed |= mpz_class(static_cast<unsigned long>(rd()));
  }
  return seed;
}

}  // namespace

Rng::Rng() : state_(gmp_randinit_mt) { state_.seed(entropy_seed()); }

Rng::Rng(std::uint64_t seed) : state_(gmp_randinit_mt) { state_.seed(from_u64(seed)); }

Rng::Rng(std::optional<std::uint64_t> seed) : state_(gmp_randinit_mt) {
  if (seed) {
    state_.seed(from_u64(*seed));
  } else {
    state_.seed(entropy_seed());
  }
}

mpz_class Rng::below(const mpz_class& bound) {
  if (bound <= 0) throw std::invalid_argument("Rng::below: bound must be positive");
  return state_.get_z_range(bound);
}

mpz_class Rng::nonzero_below(const mpz_class& bound) {
  if (bound <= 1) throw std::invalid_argument("Rng::nonzero_below: bound must exceed 1");
  return state_.get_z_range(bound - 1) + 1;
}

mpz_class Rng::bits(unsigned bit_count) { return state_.get_z_bits(bit_count); }

std::uint64_t Rng::u64() { return to_u64(bits(64)); }

}  // namespace tapfed
