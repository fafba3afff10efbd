// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tapfed/dlog.hpp"
#include "tapfed/group.hpp"

namespace tapfed::tmcfe {

// t-of-s threshold multi-client functional encryption for inner products:
// n clients encrypt per-client vectors under a shared label, s decryptors
// each hold one Shamir share of the functional key, and any t partial
// decryptions recombine to sum_i <x_i, y_i>. Decryptors never see the
// aggregate in the clear; only the combining side runs the final dlog.

struct PublicParams {
  GroupParams group;
  unsigned threshold_t = 0;
  unsigned share_count_s = 0;
  unsigned client_count_n = 0;
  std::vector<unsigned> vector_lengths;  // eta_i per client
  std::string hash_id;

  unsigned total_length() const;
  bool operator==(const PublicParams&) const = default;
};

struct MasterSecretKey {
  std::vector<std::vector<mpz_class>> W;  // n rows, row i of length eta_i
  std::vector<std::vector<mpz_class>> U;
  std::vector<mpz_class> alpha;
  mpz_class alpha_sum_A;
  std::vector<mpz_class> g_alpha;                    // g^{alpha_k}
  std::vector<std::vector<mpz_class>> masked_bases;  // h_{i,k} = g^{A * W_{i,k}}
};

// What a client holds: enough to encrypt, nothing that decrypts. No W row,
// no alpha.
struct PartySecretKey {
  unsigned client_index = 0;  // 1-based
  PublicParams pp;
  std::vector<mpz_class> g_alpha;
  std::vector<mpz_class> masked_bases;  // length eta_i
  std::vector<mpz_class> u_row;         // U_i in the clear
};

// One decryptor's share of the functional key for (y, label): raw
// polynomial evaluations at x = share_index. Lagrange coefficients are
// applied at combine time over whichever subset actually responds, so any
// t of s shares work.
struct FunctionalKeyShare {
  unsigned share_index = 0;  // 1-based
  mpz_class v0;              // f^(0)(j)
  std::vector<mpz_class> v1;  // f^(i)(j) for i in [1, n]
  std::vector<mpz_class> weight_vector;  // y, concatenated over clients
  std::string label;
};

struct Ciphertext {
  unsigned client_index = 0;
  std::string label;
  std::vector<mpz_class> ct0;  // length eta_i
  mpz_class ct1;
};

struct PartialDecryption {
  unsigned share_index = 0;
  mpz_class ct0_agg;
  std::vector<mpz_class> ct1_shares;  // n entries
  mpz_class ct2_share;
  std::string label;
};

struct SetupResult {
  PublicParams pp;
  MasterSecretKey msk;
};

SetupResult setup(unsigned lambda_bits, const std::vector<unsigned>& vector_lengths, unsigned t,
                  unsigned s, unsigned n, std::optional<std::uint64_t> seed = std::nullopt);
// Same, but over an existing group (key ceremonies and tests reuse one
// group across many scheme instances).
SetupResult setup_with_group(const GroupParams& group, const std::vector<unsigned>& vector_lengths,
                             unsigned t, unsigned s, unsigned n, Rng& rng);

PartySecretKey sk_distribute(const PublicParams& pp, const MasterSecretKey& msk,
                             unsigned client_index);

// Emits all s shares from one polynomial sampling, so independently
// requesting decryptors receive shares of the same polynomials.
std::vector<FunctionalKeyShare> dk_generate(const PublicParams& pp, const MasterSecretKey& msk,
                                            const std::vector<mpz_class>& weight_vector_y,
                                            std::string_view label,
                                            std::optional<std::uint64_t> seed = std::nullopt);
std::vector<FunctionalKeyShare> dk_generate(const PublicParams& pp, const MasterSecretKey& msk,
                                            const std::vector<mpz_class>& weight_vector_y,
                                            std::string_view label, Rng& rng);

Ciphertext encrypt(const PartySecretKey& sk, const std::vector<mpz_class>& x,
                   std::string_view label, std::optional<std::uint64_t> seed = std::nullopt);
// Deterministic-randomness variant; lets tests pin r (including r = 0).
Ciphertext encrypt_with_randomness(const PartySecretKey& sk, const std::vector<mpz_class>& x,
                                   std::string_view label, const mpz_class& r);

PartialDecryption share_decrypt(const PublicParams& pp, const std::vector<Ciphertext>& ciphertexts,
                                const std::vector<mpz_class>& weight_vector_y,
                                const FunctionalKeyShare& dk_share);

// Verifies the ct0 aggregates agree across partials (tamper check), picks
// the lowest t share indices, applies Lagrange coefficients in the
// exponent, and reads the result out with a bounded dlog.
std::int64_t combine_decrypt(const PublicParams& pp,
                             const std::vector<PartialDecryption>& partials,
                             const std::vector<mpz_class>& weight_vector_y,
                             std::int64_t dlog_bound);
std::int64_t combine_decrypt(const PublicParams& pp,
                             const std::vector<PartialDecryption>& partials,
                             const std::vector<mpz_class>& weight_vector_y,
                             const BsgsTable& table);

}  // namespace tapfed::tmcfe
