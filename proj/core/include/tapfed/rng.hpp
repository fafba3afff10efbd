// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>

namespace tapfed {

// Randomness source for all key material and nonces. Seeded construction is
// fully deterministic (GMP Mersenne Twister); the default constructor pulls
// entropy from the OS.
class Rng {
 public:
  Rng();
  explicit Rng(std::uint64_t seed);
  explicit Rng(std::optional<std::uint64_t> seed);

  // Uniform in [0, bound). bound must be positive.
  mpz_class below(const mpz_class& bound);
  // Uniform in [1, bound).
  mpz_class nonzero_below(const mpz_class& bound);
  mpz_class bits(unsigned bit_count);
  std::uint64_t u64();

 private:
  gmp_randclass state_;
};

}  // namespace tapfed
