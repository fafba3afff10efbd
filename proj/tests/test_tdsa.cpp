// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <thread>

#include "tapfed/error.hpp"
#include "tapfed/serial.hpp"
#include "tapfed/tdsa.hpp"

using namespace tapfed;
using namespace tapfed::tdsa;

namespace {

GroupParams test_group() {
  static GroupParams group = gen_group(32, 7);
  return group;
}

struct Fixture {
  std::unique_ptr<CryptoInfrastructure> infra;
  std::vector<PartyState> parties;
  std::vector<AggregatorState> aggregators;
  codec::EncodingConfig enc;
};

Fixture make_fixture(unsigned n, unsigned s, unsigned t, unsigned dim, std::uint64_t seed,
                     unsigned trust = 0, codec::FusionMode mode = codec::FusionMode::IterAvg) {
  Fixture fx;
  std::vector<std::string> parties, aggregators;
  for (unsigned i = 0; i < n; ++i) parties.push_back("p" + std::to_string(i + 1));
  for (unsigned j = 0; j < s; ++j) aggregators.push_back("a" + std::to_string(j + 1));
  fx.infra = std::make_unique<CryptoInfrastructure>(test_group(), parties, aggregators, dim, t,
                                                    trust, seed);
  // pr/prw stay small here: the 32-bit test group only fits dlog bounds
  // well below p/2.
  fx.enc = codec::EncodingConfig::make(3, 3, 4.0, n);
  for (unsigned i = 0; i < n; ++i) {
    PartyState state;
    state.id = parties[i];
    state.sk = fx.infra->party_key(parties[i]);
    state.enc = fx.enc;
    state.sample_count = 100 * (i + 1);
    fx.parties.push_back(std::move(state));
  }
  for (unsigned j = 0; j < s; ++j) {
    AggregatorState state;
    state.id = aggregators[j];
    state.share_index = fx.infra->aggregator_share_index(aggregators[j]);
    state.mode = mode;
    state.enc = fx.enc;
    fx.aggregators.push_back(std::move(state));
  }
  return fx;
}

std::vector<double> weighted_average(const std::vector<std::vector<double>>& vectors,
                                     const std::vector<double>& weights) {
  std::vector<double> out(vectors[0].size(), 0.0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += weights[i] * vectors[i][c];
  }
  return out;
}

}  // namespace

TEST_CASE("protect without dp encrypts the exact encoded update") {
  Fixture fx = make_fixture(1, 1, 1, 3, 11);
  std::vector<double> update{0.5, -0.25, 1.0};
  RoundLabel label = RoundLabel::for_round(1);
  ProtectedUpdate protected_update =
      tdsa_protect(fx.parties[0], update, label, std::nullopt, 99);
  CHECK_FALSE(protected_update.dp_applied);
  CHECK(protected_update.ciphertext.label == label.bytes());

  // Recover through a single-aggregator pipeline and compare coordinates.
  auto outcome = tdsa_aggregate(fx.aggregators[0], {protected_update}, label, *fx.infra,
                                fx.infra->aggregator_id_set());
  REQUIRE(outcome.status == AggregateOutcome::Status::Produced);
  std::vector<double> recovered = tdsa_recover(fx.parties[0], {*outcome.partial}, fx.enc);
  for (std::size_t c = 0; c < update.size(); ++c) {
    CHECK(std::abs(recovered[c] - update[c]) <= 1e-3);
  }
}

TEST_CASE("protect refuses to reuse a label") {
  Fixture fx = make_fixture(1, 1, 1, 2, 12);
  std::vector<double> update{0.1, 0.2};
  RoundLabel label = RoundLabel::for_round(1);
  tdsa_protect(fx.parties[0], update, label, std::nullopt, 1);
  CHECK_THROWS_AS(tdsa_protect(fx.parties[0], update, label, std::nullopt, 2), Error);
  try {
    tdsa_protect(fx.parties[0], update, RoundLabel::for_round(1), std::nullopt, 3);
  } catch (const Error& err) {
    CHECK(err.code() == Errc::label_reuse);
  }
  // A different round or scope is fresh again.
  tdsa_protect(fx.parties[0], update, RoundLabel::for_round(2), std::nullopt, 4);
  tdsa_protect(fx.parties[0], update, RoundLabel::personalized(2, "p1"), std::nullopt, 5);
}

TEST_CASE("protect validates the update width") {
  Fixture fx = make_fixture(1, 1, 1, 3, 13);
  std::vector<double> narrow{0.1};
  CHECK_THROWS_AS(tdsa_protect(fx.parties[0], narrow, RoundLabel::for_round(1)), Error);
}

TEST_CASE("dp noise enters before encryption at 1/n scale") {
  const unsigned n = 2, dim = 3;
  Fixture fx = make_fixture(n, 1, 1, dim, 14);
  RoundLabel label = RoundLabel::for_round(1);
  DpConfig dp{DpConfig::Mechanism::Gaussian, 0.05};

  std::vector<std::vector<double>> plain{{0.5, -0.25, 1.0}, {0.75, 0.5, -0.5}};
  std::vector<ProtectedUpdate> updates;
  std::vector<std::vector<double>> noised = plain;
  for (unsigned i = 0; i < n; ++i) {
    std::uint64_t seed = 1000 + i;
    updates.push_back(tdsa_protect(fx.parties[i], plain[i], label, dp, seed));
    CHECK(updates.back().dp_applied);
    // Independent replay of the noise stream the party drew.
    std::mt19937_64 noise_rng(mix_seed(seed, 0x6470ull));
    std::normal_distribution<double> dist(0.0, dp.scale);
    for (unsigned c = 0; c < dim; ++c) noised[i][c] += dist(noise_rng) / n;
  }

  auto outcome = tdsa_aggregate(fx.aggregators[0], updates, label, *fx.infra,
                                fx.infra->aggregator_id_set());
  REQUIRE(outcome.status == AggregateOutcome::Status::Produced);
  std::vector<double> recovered = tdsa_recover(fx.parties[0], {*outcome.partial}, fx.enc);
  std::vector<double> expected = weighted_average(noised, {0.5, 0.5});
  for (unsigned c = 0; c < dim; ++c) {
    CHECK(std::abs(recovered[c] - expected[c]) <= (n + 1) * 1e-3);
  }
}

TEST_CASE("compliance follows the isolation example: two grants, one rejection") {
  Fixture fx = make_fixture(3, 3, 2, 2, 15, 2);
  RoundLabel label = RoundLabel::for_round(1);
  codec::EncodingConfig enc = fx.enc;

  std::vector<codec::PartyStat> stats{{"p1", 1, 0}, {"p2", 1, 0}, {"p3", 1, 0}};
  codec::FusionSpec honest = codec::make_fusion_spec(codec::FusionMode::IterAvg, stats,
                                                     label.bytes(), enc);
  codec::FusionSpec isolation = honest;
  isolation.weights = {1.0, 1.0, 0.0};
  isolation.scaled_weights = {10000, 10000, 0};

  auto expected = fx.infra->aggregator_id_set();
  Decision first = fx.infra->compliance_submit({"a1", honest, label}, expected);
  CHECK(first.status == Decision::Status::Pending);
  Decision second = fx.infra->compliance_submit({"a2", honest, label}, expected);
  CHECK(second.status == Decision::Status::Granted);
  Decision redeem = fx.infra->compliance_submit({"a1", honest, label}, expected);
  CHECK(redeem.status == Decision::Status::Granted);
  Decision third = fx.infra->compliance_submit({"a3", isolation, label}, expected);
  CHECK(third.status == Decision::Status::Rejected);
  CHECK(third.reason.find("one-key-per-label") != std::string::npos);
  CHECK(fx.infra->compliance().issued.size() == 1);
}

TEST_CASE("resubmission returns the cached share without resampling") {
  Fixture fx = make_fixture(2, 2, 2, 2, 16);
  RoundLabel label = RoundLabel::for_round(1);
  std::vector<codec::PartyStat> stats{{"p1", 1, 0}, {"p2", 1, 0}};
  codec::FusionSpec spec =
      codec::make_fusion_spec(codec::FusionMode::IterAvg, stats, label.bytes(), fx.enc);
  auto expected = fx.infra->aggregator_id_set();
  fx.infra->compliance_submit({"a1", spec, label}, expected);
  Decision granted = fx.infra->compliance_submit({"a2", spec, label}, expected);
  REQUIRE(granted.status == Decision::Status::Granted);
  Decision again = fx.infra->compliance_submit({"a2", spec, label}, expected);
  REQUIRE(again.status == Decision::Status::Granted);
  REQUIRE(granted.coordinate_shares.size() == again.coordinate_shares.size());
  for (std::size_t k = 0; k < granted.coordinate_shares.size(); ++k) {
    CHECK(serial::encode(granted.coordinate_shares[k], test_group()) ==
          serial::encode(again.coordinate_shares[k], test_group()));
  }
}

TEST_CASE("compliance rejects malformed specs and unknown requesters") {
  Fixture fx = make_fixture(2, 2, 2, 2, 17);
  RoundLabel label = RoundLabel::for_round(1);
  std::vector<codec::PartyStat> stats{{"p1", 1, 0}, {"p2", 1, 0}};
  codec::FusionSpec spec =
      codec::make_fusion_spec(codec::FusionMode::IterAvg, stats, label.bytes(), fx.enc);
  auto expected = fx.infra->aggregator_id_set();

  codec::FusionSpec unknown_party = spec;
  unknown_party.party_ids[1] = "p9";
  CHECK(fx.infra->compliance_submit({"a1", unknown_party, label}, expected).status ==
        Decision::Status::Rejected);

  codec::FusionSpec wrong_label = spec;
  wrong_label.label = RoundLabel::for_round(2).bytes();
  CHECK(fx.infra->compliance_submit({"a1", wrong_label, label}, expected).status ==
        Decision::Status::Rejected);

  CHECK(fx.infra->compliance_submit({"a9", spec, label}, expected).status ==
        Decision::Status::Rejected);
}

TEST_CASE("a one-versus-one disagreement grants nobody") {
  Fixture fx = make_fixture(2, 2, 2, 2, 18);
  RoundLabel label = RoundLabel::for_round(1);
  std::vector<codec::PartyStat> stats{{"p1", 1, 0}, {"p2", 1, 0}};
  codec::FusionSpec spec_a =
      codec::make_fusion_spec(codec::FusionMode::IterAvg, stats, label.bytes(), fx.enc);
  codec::FusionSpec spec_b = spec_a;
  spec_b.scaled_weights[0] += 1;

  auto expected = fx.infra->aggregator_id_set();
  CHECK(fx.infra->compliance_submit({"a1", spec_a, label}, expected).status ==
        Decision::Status::Pending);
  CHECK(fx.infra->compliance_submit({"a2", spec_b, label}, expected).status ==
        Decision::Status::Rejected);
  // After a2's conflicting submission, a1 can never reach the threshold.
  CHECK(fx.infra->compliance_submit({"a1", spec_a, label}, expected).status ==
        Decision::Status::Rejected);
  CHECK(fx.infra->compliance().issued.empty());
}

TEST_CASE("only one distinct spec is granted per label under any order") {
  std::vector<unsigned> order{0, 1, 2};
  std::sort(order.begin(), order.end());
  do {
    Fixture fx = make_fixture(3, 3, 2, 2, 19, 2);
    RoundLabel label = RoundLabel::for_round(1);
    std::vector<codec::PartyStat> stats{{"p1", 1, 0}, {"p2", 1, 0}, {"p3", 1, 0}};
    codec::FusionSpec honest =
        codec::make_fusion_spec(codec::FusionMode::IterAvg, stats, label.bytes(), fx.enc);
    codec::FusionSpec rogue = honest;
    rogue.scaled_weights[2] = 0;

    std::vector<DkRequest> requests{{"a1", honest, label}, {"a2", honest, label},
                                    {"a3", rogue, label}};
    auto expected = fx.infra->aggregator_id_set();
    for (unsigned idx : order) fx.infra->compliance_submit(requests[idx], expected);
    // Re-poll everyone; count distinct granted specs.
    unsigned honest_grants = 0, rogue_grants = 0;
    for (unsigned idx : order) {
      Decision d = fx.infra->compliance_submit(requests[idx], expected);
      if (d.status != Decision::Status::Granted) continue;
      if (requests[idx].fusion.same_spec(honest)) ++honest_grants;
      if (requests[idx].fusion.same_spec(rogue)) ++rogue_grants;
    }
    CHECK(fx.infra->compliance().issued.size() <= 1);
    CHECK((honest_grants == 0 || rogue_grants == 0));
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST_CASE("aggregate produces a partial whose combine equals the plaintext average") {
  const unsigned n = 5, s = 3, t = 2, dim = 4;
  Fixture fx = make_fixture(n, s, t, dim, 20);
  RoundLabel label = RoundLabel::for_round(1);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::vector<std::vector<double>> plain(n, std::vector<double>(dim));
  std::vector<ProtectedUpdate> updates;
  for (unsigned i = 0; i < n; ++i) {
    for (auto& v : plain[i]) v = dist(rng);
    updates.push_back(tdsa_protect(fx.parties[i], plain[i], label, std::nullopt, 300 + i));
  }

  // Submission pass (early requesters stay pending), then a redeem pass
  // once the quorum has formed.
  auto expected = fx.infra->aggregator_id_set();
  for (unsigned j = 0; j < s; ++j) {
    tdsa_aggregate(fx.aggregators[j], updates, label, *fx.infra, expected);
  }
  std::vector<ModelPartial> partials;
  for (unsigned j = 0; j < s; ++j) {
    auto outcome = tdsa_aggregate(fx.aggregators[j], updates, label, *fx.infra, expected);
    REQUIRE(outcome.status == AggregateOutcome::Status::Produced);
    partials.push_back(*outcome.partial);
  }

  std::vector<double> expected_avg =
      weighted_average(plain, std::vector<double>(n, 1.0 / n));
  std::vector<double> recovered =
      tdsa_recover(fx.parties[0], {partials[0], partials[1]}, fx.enc);
  for (unsigned c = 0; c < dim; ++c) {
    CHECK(std::abs(recovered[c] - expected_avg[c]) <= (n + 1) * 1e-3);
  }
}

TEST_CASE("party dropout shrinks the fusion spec and the average") {
  const unsigned n = 5, dim = 3;
  Fixture fx = make_fixture(n, 2, 2, dim, 21);
  RoundLabel label = RoundLabel::for_round(1);

  std::vector<std::vector<double>> plain;
  std::vector<ProtectedUpdate> updates;
  for (unsigned i = 0; i < n - 1; ++i) {  // p5 dropped
    plain.push_back({0.1 * (i + 1), -0.2 * (i + 1), 0.3});
    updates.push_back(tdsa_protect(fx.parties[i], plain[i], label, std::nullopt, 400 + i));
  }

  auto expected = fx.infra->aggregator_id_set();
  for (auto& agg : fx.aggregators) {
    tdsa_aggregate(agg, updates, label, *fx.infra, expected);
  }
  std::vector<ModelPartial> partials;
  for (auto& agg : fx.aggregators) {
    auto outcome = tdsa_aggregate(agg, updates, label, *fx.infra, expected);
    REQUIRE(outcome.status == AggregateOutcome::Status::Produced);
    CHECK(outcome.partial->fusion.party_ids.size() == n - 1);
    partials.push_back(*outcome.partial);
  }

  std::vector<double> recovered = tdsa_recover(fx.parties[0], partials, fx.enc);
  std::vector<double> oracle =
      weighted_average(plain, std::vector<double>(n - 1, 1.0 / (n - 1)));
  for (unsigned c = 0; c < dim; ++c) {
    CHECK(std::abs(recovered[c] - oracle[c]) <= n * 1e-3);
  }
}

TEST_CASE("a replayed ciphertext from an earlier round is rejected") {
  Fixture fx = make_fixture(2, 1, 1, 2, 22);
  RoundLabel round1 = RoundLabel::for_round(1);
  RoundLabel round2 = RoundLabel::for_round(2);
  std::vector<double> update{0.5, 0.5};

  ProtectedUpdate stale = tdsa_protect(fx.parties[0], update, round1, std::nullopt, 1);
  ProtectedUpdate fresh_p1 = tdsa_protect(fx.parties[0], update, round2, std::nullopt, 2);
  ProtectedUpdate fresh_p2 = tdsa_protect(fx.parties[1], update, round2, std::nullopt, 3);

  auto expected = fx.infra->aggregator_id_set();
  CHECK_THROWS_AS(
      tdsa_aggregate(fx.aggregators[0], {stale, fresh_p2}, round2, *fx.infra, expected), Error);

  // Rewriting only the outer label still trips the ciphertext-level guard.
  ProtectedUpdate forged = stale;
  forged.label = round2;
  try {
    tdsa_aggregate(fx.aggregators[0], {forged, fresh_p2}, round2, *fx.infra, expected);
    FAIL("expected label mismatch");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::label_mismatch);
  }
}

TEST_CASE("recover is bit-identical across all t-subsets and rejects shortfalls") {
  const unsigned n = 2, s = 5, t = 3, dim = 3;
  Fixture fx = make_fixture(n, s, t, dim, 23);
  RoundLabel label = RoundLabel::for_round(1);

  std::vector<ProtectedUpdate> updates;
  for (unsigned i = 0; i < n; ++i) {
    updates.push_back(tdsa_protect(fx.parties[i], std::vector<double>{0.25, -0.75, 1.5}, label,
                                   std::nullopt, 500 + i));
  }
  auto expected = fx.infra->aggregator_id_set();
  for (auto& agg : fx.aggregators) {
    tdsa_aggregate(agg, updates, label, *fx.infra, expected);
  }
  std::vector<ModelPartial> partials;
  for (auto& agg : fx.aggregators) {
    auto outcome = tdsa_aggregate(agg, updates, label, *fx.infra, expected);
    REQUIRE(outcome.status == AggregateOutcome::Status::Produced);
    partials.push_back(*outcome.partial);
  }

  std::vector<double> reference;
  for (unsigned a = 0; a < s; ++a) {
    for (unsigned b = a + 1; b < s; ++b) {
      for (unsigned c = b + 1; c < s; ++c) {
        std::vector<ModelPartial> subset{partials[a], partials[b], partials[c]};
        std::vector<double> recovered = tdsa_recover(fx.parties[1], subset, fx.enc);
        if (reference.empty()) {
          reference = recovered;
        } else {
          CHECK(recovered == reference);  // bit-identical
        }
      }
    }
  }

  CHECK_THROWS_AS(tdsa_recover(fx.parties[0], {partials[0], partials[1]}, fx.enc), Error);

  std::vector<ModelPartial> tampered{partials[0], partials[1], partials[2]};
  tampered[2].coords[1].ct0_agg =
      mod_mul(tampered[2].coords[1].ct0_agg, test_group().generator_g, test_group());
  try {
    tdsa_recover(fx.parties[0], tampered, fx.enc);
    FAIL("expected tamper abort");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::tamper_detected);
  }
}

TEST_CASE("scoped labels partition the key space") {
  Fixture fx = make_fixture(2, 1, 1, 2, 24);
  RoundLabel scoped_p1 = RoundLabel::personalized(1, "p1");
  RoundLabel scoped_p2 = RoundLabel::personalized(1, "p2");
  std::vector<double> update{0.5, 0.5};

  ProtectedUpdate u1 = tdsa_protect(fx.parties[0], update, scoped_p1, std::nullopt, 1);
  ProtectedUpdate u2 = tdsa_protect(fx.parties[1], update, scoped_p2, std::nullopt, 2);
  auto expected = fx.infra->aggregator_id_set();
  // Mixed scopes cannot aggregate together.
  CHECK_THROWS_AS(tdsa_aggregate(fx.aggregators[0], {u1, u2}, scoped_p1, *fx.infra, expected),
                  Error);
  // And each scope gets its own one-key-per-label ledger entry.
  ProtectedUpdate u2_scope1 = tdsa_protect(fx.parties[1], update, scoped_p1, std::nullopt, 3);
  auto outcome =
      tdsa_aggregate(fx.aggregators[0], {u1, u2_scope1}, scoped_p1, *fx.infra, expected);
  CHECK(outcome.status == AggregateOutcome::Status::Produced);
  CHECK(fx.infra->compliance().issued.count(scoped_p1.bytes()) == 1);
  CHECK(fx.infra->compliance().issued.count(scoped_p2.bytes()) == 0);
}

TEST_CASE("concurrent submissions never issue two specs for one label") {
  Fixture fx = make_fixture(3, 6, 3, 2, 26, 3);
  RoundLabel label = RoundLabel::for_round(1);
  std::vector<codec::PartyStat> stats{{"p1", 1, 0}, {"p2", 1, 0}, {"p3", 1, 0}};
  codec::FusionSpec honest =
      codec::make_fusion_spec(codec::FusionMode::IterAvg, stats, label.bytes(), fx.enc);
  codec::FusionSpec rogue = honest;
  rogue.scaled_weights[0] += 1;

  auto expected = fx.infra->aggregator_id_set();
  std::vector<std::thread> workers;
  std::array<Decision::Status, 6> results{};
  for (unsigned j = 0; j < 6; ++j) {
    workers.emplace_back([&, j] {
      const codec::FusionSpec& spec = j % 2 == 0 ? honest : rogue;
      DkRequest request{"a" + std::to_string(j + 1), spec, label};
      results[j] = fx.infra->compliance_submit(request, expected).status;
    });
  }
  for (auto& worker : workers) worker.join();

  CHECK(fx.infra->compliance().issued.size() <= 1);
  // Re-poll serially: grants may only ever land on one of the two specs.
  unsigned honest_grants = 0, rogue_grants = 0;
  for (unsigned j = 0; j < 6; ++j) {
    const codec::FusionSpec& spec = j % 2 == 0 ? honest : rogue;
    DkRequest request{"a" + std::to_string(j + 1), spec, label};
    if (fx.infra->compliance_submit(request, expected).status == Decision::Status::Granted) {
      (j % 2 == 0 ? honest_grants : rogue_grants) += 1;
    }
  }
  CHECK((honest_grants == 0 || rogue_grants == 0));
  CHECK(honest_grants + rogue_grants >= 3);  // whichever spec won serves its quorum
}

TEST_CASE("an aggregator denied by compliance produces nothing") {
  Fixture fx = make_fixture(2, 3, 2, 2, 25, 2);
  RoundLabel label = RoundLabel::for_round(1);
  std::vector<double> update{1.0, -1.0};
  std::vector<ProtectedUpdate> updates{
      tdsa_protect(fx.parties[0], update, label, std::nullopt, 1),
      tdsa_protect(fx.parties[1], update, label, std::nullopt, 2)};
  auto expected = fx.infra->aggregator_id_set();

  // Two honest aggregators agree and issue the label's key.
  tdsa_aggregate(fx.aggregators[0], updates, label, *fx.infra, expected);
  tdsa_aggregate(fx.aggregators[1], updates, label, *fx.infra, expected);

  // The third asks for a different weighting: denied, no partial, and no
  // way to run share_decrypt without a share.
  fx.aggregators[2].mode = codec::FusionMode::FedAvg;
  auto outcome = tdsa_aggregate(fx.aggregators[2], updates, label, *fx.infra, expected);
  CHECK(outcome.status == AggregateOutcome::Status::Denied);
  CHECK_FALSE(outcome.partial.has_value());
}
