// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#include "tapfed/tmcfe.hpp"

#include <algorithm>
#include <numeric>

#include "tapfed/error.hpp"
#include "tapfed/hash.hpp"
#include "tapfed/shamir.hpp"

namespace tapfed::tmcfe {

namespace {

mpz_class dot_mod(const std::vector<mpz_class>& a, const std::vector<mpz_class>& b,
                  const GroupParams& g) {
  mpz_class acc = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (sgn(a[k]) == 0 || sgn(b[k]) == 0) continue;
    acc += a[k] * b[k];
  }
  return reduce_scalar(acc, g);
}

// Evaluations of a degree-(t-1) polynomial with the given constant term at
// x = 1..s, coefficients drawn from rng.
std::vector<mpz_class> poly_evals(const mpz_class& constant, unsigned t, unsigned s,
                                  const GroupParams& g, Rng& rng) {
  std::vector<mpz_class> coeffs(t);
  coeffs[0] = constant;
  for (unsigned k = 1; k < t; ++k) coeffs[k] = rng.below(g.order_p);
  std::vector<mpz_class> evals(s);
  for (unsigned j = 1; j <= s; ++j) {
    mpz_class value = 0;
    for (unsigned k = t; k-- > 0;) value = reduce_scalar(value * j + coeffs[k], g);
    evals[j - 1] = value;
  }
  return evals;
}

void check_weight_arity(const PublicParams& pp, const std::vector<mpz_class>& y) {
  if (y.size() != pp.total_length()) {
    fail(Errc::arity_mismatch, "weight vector length must equal the total client length");
  }
}

// Slices y into the per-client segments, in client-index order.
std::vector<std::pair<std::size_t, std::size_t>> client_segments(const PublicParams& pp) {
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  segments.reserve(pp.client_count_n);
  std::size_t offset = 0;
  for (unsigned len : pp.vector_lengths) {
    segments.emplace_back(offset, len);
    offset += len;
  }
  return segments;
}

}  // namespace

unsigned PublicParams::total_length() const {
  unsigned total = 0;
  for (unsigned len : vector_lengths) total += len;
  return total;
}

SetupResult setup_with_group(const GroupParams& group, const std::vector<unsigned>& vector_lengths,
                             unsigned t, unsigned s, unsigned n, Rng& rng) {
  if (t < 1 || t > s) fail(Errc::threshold_exceeds_shares, "need 1 <= t <= s");
  if (vector_lengths.empty()) fail(Errc::arity_mismatch, "vector_lengths must be non-empty");
  if (n != vector_lengths.size()) {
    fail(Errc::arity_mismatch, "client count must match vector_lengths");
  }
  for (unsigned len : vector_lengths) {
    if (len == 0) fail(Errc::arity_mismatch, "every client length must be at least 1");
  }

  SetupResult out;
  out.pp = PublicParams{group, t, s, n, vector_lengths, kLabelHashId};

  const unsigned eta_total = out.pp.total_length();
  MasterSecretKey& msk = out.msk;

  msk.alpha.resize(eta_total);
  msk.g_alpha.resize(eta_total);
  mpz_class sum = 0;
  for (unsigned k = 0; k < eta_total; ++k) {
    msk.alpha[k] = rng.below(group.order_p);
    msk.g_alpha[k] = mod_exp(group.generator_g, msk.alpha[k], group);
    sum += msk.alpha[k];
  }
  msk.alpha_sum_A = reduce_scalar(sum, group);

  msk.W.resize(n);
  msk.U.resize(n);
  msk.masked_bases.resize(n);
  for (unsigned i = 0; i < n; ++i) {
    const unsigned eta_i = vector_lengths[i];
    msk.W[i].resize(eta_i);
    msk.U[i].resize(eta_i);
    msk.masked_bases[i].resize(eta_i);
    for (unsigned k = 0; k < eta_i; ++k) {
      msk.W[i][k] = rng.below(group.order_p);
      msk.U[i][k] = rng.below(group.order_p);
      msk.masked_bases[i][k] =
          mod_exp(group.generator_g, reduce_scalar(msk.alpha_sum_A * msk.W[i][k], group), group);
    }
  }
  return out;
}

SetupResult setup(unsigned lambda_bits, const std::vector<unsigned>& vector_lengths, unsigned t,
                  unsigned s, unsigned n, std::optional<std::uint64_t> seed) {
  Rng rng(seed);
  GroupParams group = gen_group(lambda_bits, rng);
  return setup_with_group(group, vector_lengths, t, s, n, rng);
}

PartySecretKey sk_distribute(const PublicParams& pp, const MasterSecretKey& msk,
                             unsigned client_index) {
  if (client_index < 1 || client_index > pp.client_count_n) {
    fail(Errc::index_out_of_range, "client index outside [1, n]");
  }
  PartySecretKey sk;
  sk.client_index = client_index;
  sk.pp = pp;
  sk.g_alpha = msk.g_alpha;
  sk.masked_bases = msk.masked_bases[client_index - 1];
  sk.u_row = msk.U[client_index - 1];
  return sk;
}

std::vector<FunctionalKeyShare> dk_generate(const PublicParams& pp, const MasterSecretKey& msk,
                                            const std::vector<mpz_class>& weight_vector_y,
                                            std::string_view label, Rng& rng) {
  check_weight_arity(pp, weight_vector_y);
  const mpz_class label_scalar = hash_to_scalar(label, pp.group);

  const auto segments = client_segments(pp);
  // a_0 = H(l) * sum_i <y_i, U_i>, b_{i,0} = <y_i, W_i>.
  mpz_class a0 = 0;
  std::vector<mpz_class> b0(pp.client_count_n);
  for (unsigned i = 0; i < pp.client_count_n; ++i) {
    auto [offset, len] = segments[i];
    std::vector<mpz_class> y_i(weight_vector_y.begin() + offset,
                               weight_vector_y.begin() + offset + len);
    a0 += dot_mod(y_i, msk.U[i], pp.group);
    b0[i] = dot_mod(y_i, msk.W[i], pp.group);
  }
  a0 = reduce_scalar(a0 * label_scalar, pp.group);

  const auto f0 = poly_evals(a0, pp.threshold_t, pp.share_count_s, pp.group, rng);
  std::vector<std::vector<mpz_class>> fi(pp.client_count_n);
  for (unsigned i = 0; i < pp.client_count_n; ++i) {
    fi[i] = poly_evals(b0[i], pp.threshold_t, pp.share_count_s, pp.group, rng);
  }

  std::vector<FunctionalKeyShare> shares(pp.share_count_s);
  for (unsigned j = 1; j <= pp.share_count_s; ++j) {
    FunctionalKeyShare& share = shares[j - 1];
    share.share_index = j;
    share.v0 = f0[j - 1];
    share.v1.resize(pp.client_count_n);
    for (unsigned i = 0; i < pp.client_count_n; ++i) share.v1[i] = fi[i][j - 1];
    share.weight_vector = weight_vector_y;
    share.label.assign(label.data(), label.size());
  }
  return shares;
}

std::vector<FunctionalKeyShare> dk_generate(const PublicParams& pp, const MasterSecretKey& msk,
                                            const std::vector<mpz_class>& weight_vector_y,
                                            std::string_view label,
                                            std::optional<std::uint64_t> seed) {
  Rng rng(seed);
  return dk_generate(pp, msk, weight_vector_y, label, rng);
}

Ciphertext encrypt_with_randomness(const PartySecretKey& sk, const std::vector<mpz_class>& x,
                                   std::string_view label, const mpz_class& r) {
  const GroupParams& g = sk.pp.group;
  const unsigned eta_i = sk.pp.vector_lengths[sk.client_index - 1];
  if (x.size() != eta_i) fail(Errc::arity_mismatch, "plaintext length must equal eta_i");
  const mpz_class label_scalar = hash_to_scalar(label, g);

  Ciphertext ct;
  ct.client_index = sk.client_index;
  ct.label.assign(label.data(), label.size());
  ct.ct0.resize(eta_i);
  for (unsigned k = 0; k < eta_i; ++k) {
    // ct0_k = g^{x_k + H(l) U_{i,k}} * h_{i,k}^r
    mpz_class exponent = reduce_scalar(x[k] + label_scalar * sk.u_row[k], g);
    ct.ct0[k] = mod_mul(mod_exp(g.generator_g, exponent, g), mod_exp(sk.masked_bases[k], r, g), g);
  }
  mpz_class g_alpha_prod = 1;
  for (const mpz_class& e : sk.g_alpha) g_alpha_prod = mod_mul(g_alpha_prod, e, g);
  ct.ct1 = mod_exp(g_alpha_prod, r, g);
  return ct;
}

Ciphertext encrypt(const PartySecretKey& sk, const std::vector<mpz_class>& x,
                   std::string_view label, std::optional<std::uint64_t> seed) {
  Rng rng(seed);
  return encrypt_with_randomness(sk, x, label, rng.below(sk.pp.group.order_p));
}

PartialDecryption share_decrypt(const PublicParams& pp, const std::vector<Ciphertext>& ciphertexts,
                                const std::vector<mpz_class>& weight_vector_y,
                                const FunctionalKeyShare& dk_share) {
  check_weight_arity(pp, weight_vector_y);
  if (dk_share.weight_vector != weight_vector_y) {
    fail(Errc::key_mismatch, "key share was issued for a different weight vector");
  }
  if (ciphertexts.size() != pp.client_count_n) {
    fail(Errc::incomplete_input, "need exactly one ciphertext per client");
  }
  std::vector<const Ciphertext*> by_client(pp.client_count_n, nullptr);
  for (const Ciphertext& ct : ciphertexts) {
    if (ct.client_index < 1 || ct.client_index > pp.client_count_n ||
        by_client[ct.client_index - 1] != nullptr) {
      fail(Errc::incomplete_input, "ciphertext client indices must cover [1, n] exactly once");
    }
    if (ct.label != dk_share.label) {
      fail(Errc::label_mismatch, "ciphertext label disagrees with the key share label");
    }
    by_client[ct.client_index - 1] = &ct;
  }

  const GroupParams& g = pp.group;
  const auto segments = client_segments(pp);

  PartialDecryption out;
  out.share_index = dk_share.share_index;
  out.label = dk_share.label;
  out.ct0_agg = 1;
  out.ct1_shares.resize(pp.client_count_n);
  for (unsigned i = 0; i < pp.client_count_n; ++i) {
    const Ciphertext& ct = *by_client[i];
    auto [offset, len] = segments[i];
    if (ct.ct0.size() != len) fail(Errc::incomplete_input, "ciphertext width disagrees with pp");
    for (unsigned k = 0; k < len; ++k) {
      const mpz_class& y = weight_vector_y[offset + k];
      if (sgn(y) == 0) continue;
      out.ct0_agg = mod_mul(out.ct0_agg, mod_exp(ct.ct0[k], y, g), g);
    }
    out.ct1_shares[i] = mod_exp(ct.ct1, dk_share.v1[i], g);
  }
  out.ct2_share = mod_exp(g.generator_g, dk_share.v0, g);
  return out;
}

std::int64_t combine_decrypt(const PublicParams& pp,
                             const std::vector<PartialDecryption>& partials,
                             const std::vector<mpz_class>& weight_vector_y,
                             const BsgsTable& table) {
  (void)weight_vector_y;  // baked into the partials; kept for call-shape symmetry
  if (partials.size() < pp.threshold_t) {
    fail(Errc::insufficient_shares, "fewer than t partial decryptions");
  }
  for (std::size_t a = 0; a < partials.size(); ++a) {
    if (partials[a].share_index < 1 || partials[a].share_index > pp.share_count_s) {
      fail(Errc::invalid_index, "partial share index outside [1, s]");
    }
    if (partials[a].ct1_shares.size() != pp.client_count_n) {
      fail(Errc::incomplete_input, "partial has wrong client arity");
    }
    if (partials[a].label != partials[0].label) {
      fail(Errc::label_mismatch, "partials carry different labels");
    }
    for (std::size_t b = a + 1; b < partials.size(); ++b) {
      if (partials[a].share_index == partials[b].share_index) {
        fail(Errc::invalid_index, "duplicate share index among partials");
      }
    }
  }

  // Tamper check: the y-weighted ciphertext product is input-determined,
  // so every honest decryptor must report the same value.
  for (const PartialDecryption& part : partials) {
    if (part.ct0_agg != partials[0].ct0_agg) {
      fail(Errc::tamper_detected, "ct0 aggregate mismatch across partials");
    }
  }

  // Deterministic responder subset: the lowest t share indices.
  std::vector<const PartialDecryption*> ordered;
  ordered.reserve(partials.size());
  for (const PartialDecryption& part : partials) ordered.push_back(&part);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->share_index < b->share_index; });
  ordered.resize(pp.threshold_t);

  std::vector<unsigned> subset;
  subset.reserve(ordered.size());
  for (const auto* part : ordered) subset.push_back(part->share_index);

  const GroupParams& g = pp.group;
  mpz_class denominator = 1;
  for (const auto* part : ordered) {
    const mpz_class coeff = lagrange_coeff_at_zero(subset, part->share_index, g);
    for (unsigned i = 0; i < pp.client_count_n; ++i) {
      denominator = mod_mul(denominator, mod_exp(part->ct1_shares[i], coeff, g), g);
    }
    denominator = mod_mul(denominator, mod_exp(part->ct2_share, coeff, g), g);
  }

  const mpz_class D = mod_mul(partials[0].ct0_agg, mod_inverse(denominator, g), g);
  try {
    return table.solve(D);
  } catch (const Error& err) {
    if (err.code() == Errc::dlog_out_of_bound) {
      fail(Errc::result_out_of_range, "combined value escapes the dlog bound");
    }
    throw;
  }
}

std::int64_t combine_decrypt(const PublicParams& pp,
                             const std::vector<PartialDecryption>& partials,
                             const std::vector<mpz_class>& weight_vector_y,
                             std::int64_t dlog_bound) {
  BsgsTable table(pp.group.generator_g, dlog_bound, pp.group);
  return combine_decrypt(pp, partials, weight_vector_y, table);
}

}  // namespace tapfed::tmcfe
