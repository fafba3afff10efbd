// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#include "tapfed/dlog.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include "tapfed/bigint.hpp"
#include "tapfed/error.hpp"

namespace tapfed {

BsgsTable::BsgsTable(const mpz_class& base, std::int64_t bound, const GroupParams& params)
    : params_(params), base_(base), bound_(bound) {
  if (bound < 0) throw std::invalid_argument("bsgs: bound must be non-negative");
  // Exponents in [0, 2*bound] must be distinct mod p or the answer is
  // ambiguous.
  if (mpz_class(2) * from_i64(bound) >= params.order_p) {
    throw std::invalid_argument("bsgs: bound too large for the group order");
  }

  const std::int64_t range = 2 * bound + 1;
  step_ = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(range))));
  if (step_ < 1) step_ = 1;

  baby_.reserve(static_cast<std::size_t>(step_));
  mpz_class cur = 1;
  for (std::int64_t j = 0; j < step_; ++j) {
    baby_.emplace(to_bytes(cur), static_cast<std::uint32_t>(j));
    cur = mod_mul(cur, base_, params_);
  }
  shift_ = mod_exp(base_, from_i64(bound_), params_);
  giant_inv_ = mod_exp(base_, from_i64(step_), params_);
  giant_ = mod_inverse(giant_inv_, params_);
}

std::int64_t BsgsTable::solve(const mpz_class& target) const {
  const std::int64_t range = 2 * bound_ + 1;
  const std::int64_t giant_count = (range + step_ - 1) / step_;

  // Aggregates cluster near zero, which sits at the middle of the shifted
  // range, so walk the giant steps outward from the center.
  const std::int64_t center = bound_ / step_;
  const mpz_class shifted_target = mod_mul(target, shift_, params_);

  auto probe = [&](const mpz_class& gamma, std::int64_t i) -> std::optional<std::int64_t> {
    auto hit = baby_.find(to_bytes(gamma));
    if (hit == baby_.end()) return std::nullopt;
    std::int64_t exponent = i * step_ + hit->second;
    if (exponent >= range) return std::nullopt;
    return exponent - bound_;
  };

  mpz_class up = mod_mul(shifted_target, mod_exp(giant_, from_i64(center), params_), params_);
  mpz_class down = up;
  for (std::int64_t delta = 0;; ++delta) {
    std::int64_t i_up = center + delta;
    std::int64_t i_down = center - delta;
    bool any = false;
    if (i_up < giant_count) {
      any = true;
      if (auto found = probe(up, i_up)) return *found;
      up = mod_mul(up, giant_, params_);
    }
    if (delta > 0 && i_down >= 0) {
      any = true;
      down = mod_mul(down, giant_inv_, params_);
      if (auto found = probe(down, i_down)) return *found;
    }
    if (!any) break;
  }
  fail(Errc::dlog_out_of_bound, "no exponent within the search bound");
}

std::int64_t bsgs_dlog(const mpz_class& target, const mpz_class& base, std::int64_t bound,
                       const GroupParams& params) {
  return BsgsTable(base, bound, params).solve(target);
}

}  // namespace tapfed
