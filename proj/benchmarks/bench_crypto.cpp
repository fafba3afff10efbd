// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#include <benchmark/benchmark.h>

#include "tapfed/dlog.hpp"
#include "tapfed/hash.hpp"
#include "tapfed/shamir.hpp"
#include "tapfed/tmcfe.hpp"

using namespace tapfed;

namespace {

const GroupParams& group256() {
  static GroupParams group = gen_group(256, 1);
  return group;
}

tmcfe::SetupResult& instance(unsigned eta) {
  static std::map<unsigned, tmcfe::SetupResult> cache;
  auto it = cache.find(eta);
  if (it == cache.end()) {
    Rng rng(eta);
    it = cache.emplace(eta, tmcfe::setup_with_group(group256(), {eta, eta}, 2, 2, 2, rng)).first;
  }
  return it->second;
}

std::vector<mpz_class> small_vector(unsigned eta, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<mpz_class> out(eta);
  for (auto& v : out) v = rng.u64() % 10000;
  return out;
}

}  // namespace

static void bm_mod_exp(benchmark::State& state) {
  const GroupParams& g = group256();
  Rng rng(7);
  mpz_class e = rng.below(g.order_p);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mod_exp(g.generator_g, e, g));
  }
}
BENCHMARK(bm_mod_exp);

static void bm_hash_to_scalar(benchmark::State& state) {
  const GroupParams& g = group256();
  for (auto _ : state) {
    benchmark::DoNotOptimize(hash_to_scalar("round-123456", g));
  }
}
BENCHMARK(bm_hash_to_scalar);

static void bm_encrypt(benchmark::State& state) {
  const unsigned eta = static_cast<unsigned>(state.range(0));
  auto& inst = instance(eta);
  tmcfe::PartySecretKey sk = tmcfe::sk_distribute(inst.pp, inst.msk, 1);
  std::vector<mpz_class> x = small_vector(eta, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tmcfe::encrypt_with_randomness(sk, x, "round-1", 123456789));
  }
  state.SetItemsProcessed(state.iterations() * eta);
}
BENCHMARK(bm_encrypt)->Arg(8)->Arg(32)->Arg(128);

static void bm_share_decrypt(benchmark::State& state) {
  const unsigned eta = static_cast<unsigned>(state.range(0));
  auto& inst = instance(eta);
  std::vector<mpz_class> y = small_vector(2 * eta, 4);
  auto shares = tmcfe::dk_generate(inst.pp, inst.msk, y, "round-1", 5);
  std::vector<tmcfe::Ciphertext> cts;
  for (unsigned i = 1; i <= 2; ++i) {
    cts.push_back(tmcfe::encrypt(tmcfe::sk_distribute(inst.pp, inst.msk, i),
                                 small_vector(eta, i), "round-1", i));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(tmcfe::share_decrypt(inst.pp, cts, y, shares[0]));
  }
  state.SetItemsProcessed(state.iterations() * eta);
}
BENCHMARK(bm_share_decrypt)->Arg(8)->Arg(32);

static void bm_bsgs_solve(benchmark::State& state) {
  const GroupParams& g = group256();
  const std::int64_t bound = state.range(0);
  BsgsTable table(g.generator_g, bound, g);
  mpz_class target = mod_exp(g.generator_g, from_i64(bound / 3), g);
  for (auto _ : state) {
    benchmark::DoNotOptimize(table.solve(target));
  }
}
BENCHMARK(bm_bsgs_solve)->Arg(1000000)->Arg(100000000);

static void bm_lagrange(benchmark::State& state) {
  const GroupParams& g = group256();
  std::vector<unsigned> subset{1, 3, 4, 7, 9};
  for (auto _ : state) {
    benchmark::DoNotOptimize(lagrange_coeff_at_zero(subset, 3, g));
  }
}
BENCHMARK(bm_lagrange);

BENCHMARK_MAIN();
