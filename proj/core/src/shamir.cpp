// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#include "tapfed/shamir.hpp"

#include <algorithm>

#include "tapfed/error.hpp"

namespace tapfed {

ShamirShareSet shamir_share(const mpz_class& secret, unsigned t, unsigned s,
                            const GroupParams& params, Rng& rng) {
  if (t < 1 || t > s) fail(Errc::threshold_exceeds_shares, "need 1 <= t <= s");
  if (mpz_class(s) >= params.order_p) {
    fail(Errc::threshold_exceeds_shares, "share count must stay below the group order");
  }

  std::vector<mpz_class> coeffs(t);
  coeffs[0] = reduce_scalar(secret, params);
  for (unsigned k = 1; k < t; ++k) coeffs[k] = rng.below(params.order_p);

  ShamirShareSet out;
  out.threshold_t = t;
  out.share_count_s = s;
  out.shares.reserve(s);
  for (unsigned j = 1; j <= s; ++j) {
    // Horner evaluation of the degree-(t-1) polynomial at x = j.
    mpz_class value = 0;
    for (unsigned k = t; k-- > 0;) {
      value = reduce_scalar(value * j + coeffs[k], params);
    }
    out.shares.emplace_back(j, value);
  }
  return out;
}

ShamirShareSet shamir_share(const mpz_class& secret, unsigned t, unsigned s,
                            const GroupParams& params, std::optional<std::uint64_t> seed) {
  Rng rng(seed);
  return shamir_share(secret, t, s, params, rng);
}

mpz_class lagrange_coeff_at_zero(const std::vector<unsigned>& subset, unsigned j,
                                 const GroupParams& params) {
  if (subset.empty()) fail(Errc::invalid_index, "empty subset");
  if (std::find(subset.begin(), subset.end(), j) == subset.end()) {
    fail(Errc::invalid_index, "index not part of the subset");
  }
  for (std::size_t a = 0; a < subset.size(); ++a) {
    if (subset[a] == 0) fail(Errc::invalid_index, "share indices start at 1");
    for (std::size_t b = a + 1; b < subset.size(); ++b) {
      if (subset[a] == subset[b]) fail(Errc::invalid_index, "duplicate index in subset");
    }
  }

  mpz_class numerator = 1;
  mpz_class denominator = 1;
  for (unsigned other : subset) {
    if (other == j) continue;
    numerator = reduce_scalar(numerator * reduce_scalar(-mpz_class(other), params), params);
    mpz_class diff = reduce_scalar(mpz_class(j) - mpz_class(other), params);
    denominator = reduce_scalar(denominator * diff, params);
  }
  return reduce_scalar(numerator * scalar_inverse(denominator, params), params);
}

}  // namespace tapfed
