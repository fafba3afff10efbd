// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "tapfed/group.hpp"

namespace tapfed {

// t-of-s sharing of a scalar in Z_p: evaluations of a random degree-(t-1)
// polynomial with constant term = secret, at x = 1..s.
struct ShamirShareSet {
  unsigned threshold_t = 0;
  unsigned share_count_s = 0;
  std::vector<std::pair<unsigned, mpz_class>> shares;  // (index j, f(j))
};

ShamirShareSet shamir_share(const mpz_class& secret, unsigned t, unsigned s,
                            const GroupParams& params,
                            std::optional<std::uint64_t> seed = std::nullopt);
ShamirShareSet shamir_share(const mpz_class& secret, unsigned t, unsigned s,
                            const GroupParams& params, Rng& rng);

// Coefficient of share j when interpolating the sharing polynomial at 0
// over the subset: prod_{j' in S, j' != j} (-j') / (j - j') mod p.
mpz_class lagrange_coeff_at_zero(const std::vector<unsigned>& subset, unsigned j,
                                 const GroupParams& params);

}  // namespace tapfed
