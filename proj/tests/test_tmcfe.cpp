// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "tapfed/error.hpp"
#include "tapfed/hash.hpp"
#include "tapfed/serial.hpp"
#include "tapfed/shamir.hpp"
#include "tapfed/tmcfe.hpp"

using namespace tapfed;
using namespace tapfed::tmcfe;

namespace {

GroupParams test_group() {
  static GroupParams group = gen_group(32, 7);
  return group;
}

SetupResult make_instance(const std::vector<unsigned>& lengths, unsigned t, unsigned s,
                          std::uint64_t seed) {
  Rng rng(seed);
  return setup_with_group(test_group(), lengths, t, s,
                          static_cast<unsigned>(lengths.size()), rng);
}

// Brute-force integer oracle for sum_i <x_i, y_i> with small entries.
std::int64_t inner_product_oracle(const std::vector<std::vector<std::int64_t>>& xs,
                                  const std::vector<std::int64_t>& y) {
  std::int64_t acc = 0;
  std::size_t at = 0;
  for (const auto& x : xs) {
    for (std::int64_t v : x) acc += v * y[at++];
  }
  return acc;
}

std::vector<mpz_class> to_scalars(const std::vector<std::int64_t>& values, const GroupParams& g) {
  std::vector<mpz_class> out;
  for (std::int64_t v : values) out.push_back(reduce_scalar(from_i64(v), g));
  return out;
}

std::vector<std::vector<unsigned>> subsets_of_size(unsigned s, unsigned size) {
  std::vector<std::vector<unsigned>> out;
  std::vector<unsigned> current;
  auto recurse = [&](auto&& self, unsigned next) -> void {
    if (current.size() == size) {
      out.push_back(current);
      return;
    }
    for (unsigned j = next; j <= s; ++j) {
      current.push_back(j);
      self(self, j + 1);
      current.pop_back();
    }
  };
  recurse(recurse, 1);
  return out;
}

struct PipelineRun {
  SetupResult instance;
  std::vector<std::vector<std::int64_t>> xs;
  std::vector<std::int64_t> y;
  std::vector<Ciphertext> cts;
  std::vector<FunctionalKeyShare> shares;
  std::vector<PartialDecryption> partials;
  std::int64_t truth = 0;
};

PipelineRun run_pipeline(const std::vector<unsigned>& lengths, unsigned t, unsigned s,
                         std::uint64_t seed, const std::string& label = "round-1") {
  PipelineRun run;
  run.instance = make_instance(lengths, t, s, seed);
  const PublicParams& pp = run.instance.pp;
  Rng rng(mix_seed(seed, 1));

  for (unsigned len : lengths) {
    std::vector<std::int64_t> x(len);
    for (auto& v : x) v = static_cast<std::int64_t>(rng.u64() % 51);
    run.xs.push_back(std::move(x));
  }
  run.y.resize(pp.total_length());
  for (auto& v : run.y) v = static_cast<std::int64_t>(rng.u64() % 51);
  run.truth = inner_product_oracle(run.xs, run.y);

  std::vector<mpz_class> y = to_scalars(run.y, pp.group);
  run.shares = dk_generate(pp, run.instance.msk, y, label, mix_seed(seed, 2));
  for (unsigned i = 1; i <= pp.client_count_n; ++i) {
    PartySecretKey sk = sk_distribute(pp, run.instance.msk, i);
    run.cts.push_back(encrypt(sk, to_scalars(run.xs[i - 1], pp.group), label,
                              mix_seed(seed, 100 + i)));
  }
  for (const FunctionalKeyShare& share : run.shares) {
    run.partials.push_back(share_decrypt(pp, run.cts, y, share));
  }
  return run;
}

}  // namespace

TEST_CASE("setup supports the degenerate single-client single-decryptor shape") {
  SetupResult instance = make_instance({2}, 1, 1, 3);
  CHECK(instance.pp.client_count_n == 1);
  CHECK(instance.pp.total_length() == 2);
  CHECK(instance.msk.W.size() == 1);
  CHECK(instance.msk.g_alpha.size() == 2);
}

TEST_CASE("setup rejects bad arities and thresholds") {
  Rng rng(1);
  CHECK_THROWS_AS(setup_with_group(test_group(), {2, 2}, 3, 2, 2, rng), Error);
  CHECK_THROWS_AS(setup_with_group(test_group(), {}, 1, 1, 0, rng), Error);
  CHECK_THROWS_AS(setup_with_group(test_group(), {2, 2}, 1, 2, 3, rng), Error);
}

TEST_CASE("masked bases recompute from W and the alpha sum") {
  SetupResult instance = make_instance({3, 3}, 2, 3, 9);
  const GroupParams& g = instance.pp.group;
  // Independent recomputation of g^{A * W_{i,k}} plus the g_alpha product.
  mpz_class a_sum = 0;
  for (const auto& a : instance.msk.alpha) a_sum += a;
  a_sum = reduce_scalar(a_sum, g);
  CHECK(a_sum == instance.msk.alpha_sum_A);
  mpz_class g_alpha_prod = 1;
  for (const auto& e : instance.msk.g_alpha) g_alpha_prod = mod_mul(g_alpha_prod, e, g);
  CHECK(g_alpha_prod == mod_exp(g.generator_g, a_sum, g));
  for (unsigned i = 0; i < 2; ++i) {
    for (unsigned k = 0; k < 3; ++k) {
      mpz_class expected =
          mod_exp(g.generator_g, reduce_scalar(a_sum * instance.msk.W[i][k], g), g);
      CHECK(instance.msk.masked_bases[i][k] == expected);
    }
  }
}

TEST_CASE("setup at 256 bits with the five-party two-decryptor shape") {
  SetupResult instance = setup(256, {4, 4, 4, 4, 4}, 2, 2, 5, 77);
  CHECK(instance.pp.group.valid());
  CHECK(mpz_sizeinbase(instance.pp.group.order_p.get_mpz_t(), 2) == 256);
  CHECK(instance.pp.client_count_n == 5);
  CHECK(instance.pp.share_count_s == 2);
}

TEST_CASE("sk_distribute projects exactly the client row and nothing else") {
  SetupResult instance = make_instance({2}, 1, 1, 5);
  PartySecretKey sk = sk_distribute(instance.pp, instance.msk, 1);
  CHECK(sk.u_row == instance.msk.U[0]);
  CHECK(sk.masked_bases == instance.msk.masked_bases[0]);
  CHECK(sk.g_alpha == instance.msk.g_alpha);

  SetupResult two = make_instance({2, 2}, 1, 1, 6);
  CHECK_THROWS_AS(sk_distribute(two.pp, two.msk, 3), Error);
  CHECK_THROWS_AS(sk_distribute(two.pp, two.msk, 0), Error);

  PartySecretKey again = sk_distribute(instance.pp, instance.msk, 1);
  CHECK(again.u_row == sk.u_row);
  CHECK(again.masked_bases == sk.masked_bases);
}

TEST_CASE("party keys and key shares carry no master secret material") {
  SetupResult instance = make_instance({4, 4}, 2, 3, 41);
  const PublicParams& pp = instance.pp;
  PartySecretKey sk = sk_distribute(pp, instance.msk, 1);
  std::string sk_bytes = serial::encode(sk);
  auto shares = dk_generate(pp, instance.msk, to_scalars({1, 2, 3, 4, 5, 6, 7, 8}, pp.group),
                            "round-1", 1);
  std::string share_bytes = serial::encode(shares[0], pp.group);

  auto contains_scalar = [&](const std::string& haystack, const mpz_class& scalar) {
    std::string needle = to_bytes_padded(scalar, pp.group.scalar_bytes());
    return haystack.find(needle) != std::string::npos;
  };
  for (const auto& row : instance.msk.W) {
    for (const auto& w : row) {
      CHECK_FALSE(contains_scalar(sk_bytes, w));
      CHECK_FALSE(contains_scalar(share_bytes, w));
    }
  }
  for (const auto& a : instance.msk.alpha) {
    CHECK_FALSE(contains_scalar(sk_bytes, a));
    CHECK_FALSE(contains_scalar(share_bytes, a));
  }
  CHECK_FALSE(contains_scalar(share_bytes, instance.msk.alpha_sum_A));
}

TEST_CASE("dk_generate with t=1 pins the constant term for every share") {
  SetupResult instance = make_instance({2, 2}, 1, 3, 13);
  const PublicParams& pp = instance.pp;
  std::vector<std::int64_t> y_small{1, 2, 3, 4};
  std::vector<mpz_class> y = to_scalars(y_small, pp.group);
  auto shares = dk_generate(pp, instance.msk, y, "round-1", 4);

  // Independent constant: H(l) * sum_i <y_i, U_i> mod p.
  mpz_class expected = 0;
  std::size_t at = 0;
  for (unsigned i = 0; i < 2; ++i) {
    for (unsigned k = 0; k < 2; ++k) expected += y[at++] * instance.msk.U[i][k];
  }
  expected = reduce_scalar(expected * hash_to_scalar("round-1", pp.group), pp.group);
  for (const auto& share : shares) CHECK(share.v0 == expected);
  // Degree 0 also pins v1 to <y_i, W_i>.
  for (unsigned i = 0; i < 2; ++i) {
    mpz_class b0 = reduce_scalar(y[2 * i] * instance.msk.W[i][0] +
                                 y[2 * i + 1] * instance.msk.W[i][1], pp.group);
    for (const auto& share : shares) CHECK(share.v1[i] == b0);
  }
}

TEST_CASE("dk_generate rejects a weight vector of the wrong total length") {
  SetupResult instance = make_instance({2, 2}, 2, 3, 140);
  std::vector<mpz_class> narrow = to_scalars({1, 2, 3}, instance.pp.group);
  CHECK_THROWS_AS(dk_generate(instance.pp, instance.msk, narrow, "round-1", 1), Error);
  try {
    dk_generate(instance.pp, instance.msk, narrow, "round-1", 1);
  } catch (const Error& err) {
    CHECK(err.code() == Errc::arity_mismatch);
  }
  CHECK_THROWS_AS(dk_generate(instance.pp, instance.msk,
                              to_scalars({1, 2, 3, 4}, instance.pp.group), "", 1),
                  Error);
}

TEST_CASE("dk_generate shares interpolate to the same constants across seeds") {
  SetupResult instance = make_instance({2, 2}, 2, 3, 14);
  const PublicParams& pp = instance.pp;
  std::vector<mpz_class> y = to_scalars({1, 2, 3, 4}, pp.group);
  auto a = dk_generate(pp, instance.msk, y, "round-1", 1000);
  auto b = dk_generate(pp, instance.msk, y, "round-1", 2000);
  CHECK(a[0].v0 != b[0].v0);  // fresh polynomial sampling

  auto at_zero = [&](const mpz_class& f1, const mpz_class& f2) {
    return reduce_scalar(2 * f1 - f2, pp.group);  // hand interpolation over {1, 2}
  };
  CHECK(at_zero(a[0].v0, a[1].v0) == at_zero(b[0].v0, b[1].v0));
  for (unsigned i = 0; i < 2; ++i) {
    CHECK(at_zero(a[0].v1[i], a[1].v1[i]) == at_zero(b[0].v1[i], b[1].v1[i]));
  }
}

TEST_CASE("encrypt with forced zero randomness exposes the label mask only") {
  SetupResult instance = make_instance({3}, 1, 1, 15);
  const PublicParams& pp = instance.pp;
  PartySecretKey sk = sk_distribute(pp, instance.msk, 1);
  std::vector<mpz_class> zeros(3, 0);
  Ciphertext ct = encrypt_with_randomness(sk, zeros, "round-1", 0);
  mpz_class h = hash_to_scalar("round-1", pp.group);
  for (unsigned k = 0; k < 3; ++k) {
    CHECK(ct.ct0[k] ==
          mod_exp(pp.group.generator_g, reduce_scalar(h * instance.msk.U[0][k], pp.group),
                  pp.group));
  }
  CHECK(ct.ct1 == 1);
}

TEST_CASE("equal randomness under different labels still separates ct0") {
  SetupResult instance = make_instance({3}, 1, 1, 16);
  PartySecretKey sk = sk_distribute(instance.pp, instance.msk, 1);
  std::vector<mpz_class> x = to_scalars({5, 6, 7}, instance.pp.group);
  Ciphertext a = encrypt_with_randomness(sk, x, "round-1", 12345);
  Ciphertext b = encrypt_with_randomness(sk, x, "round-2", 12345);
  CHECK(a.ct1 == b.ct1);
  CHECK(a.ct0 != b.ct0);
}

TEST_CASE("encrypt validates arity and label") {
  SetupResult instance = make_instance({3}, 1, 1, 17);
  PartySecretKey sk = sk_distribute(instance.pp, instance.msk, 1);
  CHECK_THROWS_AS(encrypt(sk, to_scalars({1, 2}, instance.pp.group), "round-1", 1), Error);
  CHECK_THROWS_AS(encrypt(sk, to_scalars({1, 2, 3}, instance.pp.group), "", 1), Error);
}

TEST_CASE("share_decrypt is deterministic across honest decryptors") {
  PipelineRun run = run_pipeline({2, 3}, 2, 3, 21);
  CHECK(run.partials[0].ct0_agg == run.partials[1].ct0_agg);
  CHECK(run.partials[1].ct0_agg == run.partials[2].ct0_agg);
}

TEST_CASE("share_decrypt rejects label mixtures and missing clients") {
  PipelineRun run = run_pipeline({2, 2}, 2, 3, 22);
  const PublicParams& pp = run.instance.pp;
  std::vector<mpz_class> y = to_scalars(run.y, pp.group);

  PartySecretKey sk1 = sk_distribute(pp, run.instance.msk, 1);
  std::vector<Ciphertext> mixed = run.cts;
  mixed[0] = encrypt(sk1, to_scalars(run.xs[0], pp.group), "round-2", 5);
  CHECK_THROWS_AS(share_decrypt(pp, mixed, y, run.shares[0]), Error);
  try {
    share_decrypt(pp, mixed, y, run.shares[0]);
  } catch (const Error& err) {
    CHECK(err.code() == Errc::label_mismatch);
  }

  std::vector<Ciphertext> missing{run.cts[0]};
  CHECK_THROWS_AS(share_decrypt(pp, missing, y, run.shares[0]), Error);

  std::vector<Ciphertext> duplicated{run.cts[0], run.cts[0]};
  CHECK_THROWS_AS(share_decrypt(pp, duplicated, y, run.shares[0]), Error);

  std::vector<mpz_class> other_y = y;
  other_y[0] += 1;
  CHECK_THROWS_AS(share_decrypt(pp, run.cts, other_y, run.shares[0]), Error);
}

TEST_CASE("single-client ct0 aggregate exponent recomputes from seeded randomness") {
  SetupResult instance = make_instance({1}, 1, 1, 23);
  const PublicParams& pp = instance.pp;
  PartySecretKey sk = sk_distribute(pp, instance.msk, 1);
  mpz_class r = 424242;
  Ciphertext ct = encrypt_with_randomness(sk, to_scalars({5}, pp.group), "round-1", r);
  std::vector<mpz_class> y = to_scalars({1}, pp.group);
  auto shares = dk_generate(pp, instance.msk, y, "round-1", 3);
  PartialDecryption partial = share_decrypt(pp, {ct}, y, shares[0]);

  mpz_class h = hash_to_scalar("round-1", pp.group);
  mpz_class exponent = reduce_scalar(
      5 + h * instance.msk.U[0][0] + instance.msk.alpha_sum_A * instance.msk.W[0][0] * r,
      pp.group);
  CHECK(partial.ct0_agg == mod_exp(pp.group.generator_g, exponent, pp.group));
}

TEST_CASE("combine_decrypt returns zero for the zero vector") {
  SetupResult instance = make_instance({3}, 1, 1, 24);
  const PublicParams& pp = instance.pp;
  PartySecretKey sk = sk_distribute(pp, instance.msk, 1);
  std::vector<mpz_class> y = to_scalars({4, 5, 6}, pp.group);
  auto shares = dk_generate(pp, instance.msk, y, "round-1", 4);
  Ciphertext ct = encrypt(sk, to_scalars({0, 0, 0}, pp.group), "round-1", 8);
  PartialDecryption partial = share_decrypt(pp, {ct}, y, shares[0]);
  CHECK(combine_decrypt(pp, {partial}, y, 1000) == 0);
}

TEST_CASE("pinned two-client example recovers 10 from every 2-subset") {
  SetupResult instance = make_instance({2, 2}, 2, 3, 25);
  const PublicParams& pp = instance.pp;
  std::vector<mpz_class> y = to_scalars({1, 1, 1, 1}, pp.group);
  auto shares = dk_generate(pp, instance.msk, y, "round-7", 5);
  std::vector<Ciphertext> cts;
  cts.push_back(encrypt(sk_distribute(pp, instance.msk, 1), to_scalars({1, 2}, pp.group),
                        "round-7", 51));
  cts.push_back(encrypt(sk_distribute(pp, instance.msk, 2), to_scalars({3, 4}, pp.group),
                        "round-7", 52));
  std::vector<PartialDecryption> partials;
  for (const auto& share : shares) partials.push_back(share_decrypt(pp, cts, y, share));

  for (const auto& subset : subsets_of_size(3, 2)) {
    std::vector<PartialDecryption> chosen;
    for (unsigned j : subset) chosen.push_back(partials[j - 1]);
    CHECK(combine_decrypt(pp, chosen, y, 1000) == 10);
  }
  CHECK_THROWS_AS(combine_decrypt(pp, {partials[0]}, y, 1000), Error);
  try {
    combine_decrypt(pp, {partials[0]}, y, 1000);
  } catch (const Error& err) {
    CHECK(err.code() == Errc::insufficient_shares);
  }
}

TEST_CASE("end-to-end correctness against the integer oracle, all subsets") {
  Rng dims(404);
  int trials = 0;
  while (trials < 200) {
    unsigned n = 1 + static_cast<unsigned>(dims.u64() % 4);
    unsigned s = 1 + static_cast<unsigned>(dims.u64() % 4);
    unsigned t = 1 + static_cast<unsigned>(dims.u64() % s);
    std::vector<unsigned> lengths;
    for (unsigned i = 0; i < n; ++i) lengths.push_back(1 + static_cast<unsigned>(dims.u64() % 5));
    PipelineRun run = run_pipeline(lengths, t, s, dims.u64());
    const PublicParams& pp = run.instance.pp;
    std::vector<mpz_class> y = to_scalars(run.y, pp.group);
    for (const auto& subset : subsets_of_size(s, t)) {
      std::vector<PartialDecryption> chosen;
      for (unsigned j : subset) chosen.push_back(run.partials[j - 1]);
      CHECK(combine_decrypt(pp, chosen, y, 200000) == run.truth);
    }
    ++trials;
  }
}

TEST_CASE("combining results are identical across every t-subset") {
  PipelineRun run = run_pipeline({2, 2, 2}, 2, 4, 31);
  const PublicParams& pp = run.instance.pp;
  std::vector<mpz_class> y = to_scalars(run.y, pp.group);
  std::int64_t reference = combine_decrypt(pp, {run.partials[0], run.partials[1]}, y, 200000);
  for (const auto& subset : subsets_of_size(4, 2)) {
    std::vector<PartialDecryption> chosen;
    for (unsigned j : subset) chosen.push_back(run.partials[j - 1]);
    CHECK(combine_decrypt(pp, chosen, y, 200000) == reference);
  }
  CHECK(reference == run.truth);
}

TEST_CASE("a forged completion share fails in at least 99 percent of trials") {
  PipelineRun run = run_pipeline({2, 2}, 3, 5, 32);
  const PublicParams& pp = run.instance.pp;
  std::vector<mpz_class> y = to_scalars(run.y, pp.group);

  Rng forger(777);
  const int trials = 200;
  int failures = 0;
  for (int trial = 0; trial < trials; ++trial) {
    FunctionalKeyShare forged = run.shares[2];
    forged.v0 = forger.below(pp.group.order_p);
    for (auto& v : forged.v1) v = forger.below(pp.group.order_p);
    std::vector<PartialDecryption> attempt{run.partials[0], run.partials[1],
                                           share_decrypt(pp, run.cts, y, forged)};
    try {
      if (combine_decrypt(pp, attempt, y, 200000) != run.truth) ++failures;
    } catch (const Error&) {
      ++failures;
    }
  }
  CHECK(failures * 100 >= trials * 99);
}

TEST_CASE("label binding: a rewritten share label fails the bounded dlog") {
  // 64-bit group so the sampled bounds sit far below p/4 and an accidental
  // in-range hit has negligible mass.
  GroupParams big = gen_group(64, 99);
  Rng rng(1001);
  const std::int64_t bounds[] = {1000, 100000, 1000000};
  const int trials = 200;
  int failures = 0;
  for (int trial = 0; trial < trials; ++trial) {
    auto instance = setup_with_group(big, {2}, 1, 1, 1, rng);
    const PublicParams& pp = instance.pp;
    std::vector<mpz_class> y = to_scalars({1, 1}, pp.group);
    // Key generated under round-2, label field rewritten to round-1: the
    // guard in share_decrypt cannot see the lie.
    auto shares = dk_generate(pp, instance.msk, y, "round-2", rng.u64());
    shares[0].label = "round-1";
    Ciphertext ct = encrypt(sk_distribute(pp, instance.msk, 1), to_scalars({3, 4}, pp.group),
                            "round-1", rng.u64());
    PartialDecryption partial = share_decrypt(pp, {ct}, y, shares[0]);
    try {
      std::int64_t value =
          combine_decrypt(pp, {partial}, y, bounds[trial % 3]);
      if (value != 7) ++failures;
    } catch (const Error&) {
      ++failures;
    }
  }
  CHECK(failures == trials);
}

TEST_CASE("combine aborts when a partial reports a different ct0 aggregate") {
  PipelineRun run = run_pipeline({2, 2}, 2, 3, 33);
  const PublicParams& pp = run.instance.pp;
  std::vector<mpz_class> y = to_scalars(run.y, pp.group);
  std::vector<PartialDecryption> tampered{run.partials[0], run.partials[1]};
  tampered[1].ct0_agg = mod_mul(tampered[1].ct0_agg, pp.group.generator_g, pp.group);
  CHECK_THROWS_AS(combine_decrypt(pp, tampered, y, 200000), Error);
  try {
    combine_decrypt(pp, tampered, y, 200000);
  } catch (const Error& err) {
    CHECK(err.code() == Errc::tamper_detected);
  }
}

TEST_CASE("combine maps an out-of-bound dlog to result-out-of-range") {
  PipelineRun run = run_pipeline({2, 2}, 2, 3, 34);
  const PublicParams& pp = run.instance.pp;
  std::vector<mpz_class> y = to_scalars(run.y, pp.group);
  REQUIRE(run.truth > 1);
  try {
    combine_decrypt(pp, {run.partials[0], run.partials[1]}, y, run.truth - 1);
    FAIL("expected result-out-of-range");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::result_out_of_range);
  }
}

TEST_CASE("combine rejects duplicate share indices and mixed labels") {
  PipelineRun run = run_pipeline({2}, 2, 3, 35);
  const PublicParams& pp = run.instance.pp;
  std::vector<mpz_class> y = to_scalars(run.y, pp.group);
  std::vector<PartialDecryption> duplicated{run.partials[0], run.partials[0]};
  CHECK_THROWS_AS(combine_decrypt(pp, duplicated, y, 200000), Error);
  std::vector<PartialDecryption> mixed{run.partials[0], run.partials[1]};
  mixed[1].label = "round-9";
  CHECK_THROWS_AS(combine_decrypt(pp, mixed, y, 200000), Error);
}
