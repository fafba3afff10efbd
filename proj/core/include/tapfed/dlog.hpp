// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>

#include "tapfed/group.hpp"

namespace tapfed {

// Baby-step/giant-step search for a signed exponent in [-bound, bound].
// The symmetric range is handled by shifting: solve base^{v'} =
// target * base^{bound} for v' in [0, 2*bound], return v' - bound.
//
// The baby table depends only on (base, bound), so callers decrypting many
// coordinates against the same base build one table and reuse it.
class BsgsTable {
 public:
  BsgsTable(const mpz_class& base, std::int64_t bound, const GroupParams& params);

  // Throws Errc::dlog_out_of_bound when no exponent in range matches.
  // That error is meaningful to callers: it flags label mismatch,
  // tampering, or an undersized bound.
  std::int64_t solve(const mpz_class& target) const;

  std::int64_t bound() const { return bound_; }

 private:
  GroupParams params_;
  mpz_class base_;
  std::int64_t bound_;
  std::int64_t step_;               // baby-step count m
  mpz_class shift_;                 // base^bound
  mpz_class giant_;                 // base^{-m}
  mpz_class giant_inv_;             // base^{m}
  std::unordered_map<std::string, std::uint32_t> baby_;
};

std::int64_t bsgs_dlog(const mpz_class& target, const mpz_class& base, std::int64_t bound,
                       const GroupParams& params);

}  // namespace tapfed
