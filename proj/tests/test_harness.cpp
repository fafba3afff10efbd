// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tapfed/error.hpp"
#include "tapfed/harness.hpp"

using namespace tapfed;
using namespace tapfed::harness;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n_parties = 3;
  cfg.s_aggregators = 3;
  cfg.threshold_t = 2;
  cfg.max_rounds_q = 3;
  cfg.local_epochs = 2;
  cfg.lambda_bits = 32;
  cfg.seed = 11;
  cfg.trainer.features = 4;
  cfg.trainer.samples = 240;
  // small precision so the dlog bound fits a 32-bit group
  cfg.pr = 3;
  cfg.prw = 3;
  cfg.value_bound = 4.0;
  return cfg;
}

}  // namespace

TEST_CASE("iid partition deals 1000 samples to 5 parties as 200 each") {
  dataset::Dataset data = dataset::synth_two_class(1000, 4, 0.3, 5);
  auto parts = dataset::partition_data(data, 5, dataset::PartitionMode::Iid, 0.5, 9);
  std::size_t total = 0;
  for (const auto& part : parts) {
    CHECK(part.size() == 200);
    total += part.size();
  }
  CHECK(total == 1000);
}

TEST_CASE("partitions are disjoint and reproducible under a fixed seed") {
  dataset::Dataset data = dataset::synth_two_class(300, 3, 0.3, 6);
  auto a = dataset::partition_data(data, 4, dataset::PartitionMode::LabelSkew, 0.5, 42);
  auto b = dataset::partition_data(data, 4, dataset::PartitionMode::LabelSkew, 0.5, 42);
  std::size_t total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].features == b[i].features);
    CHECK(a[i].targets == b[i].targets);
    total += a[i].size();
  }
  CHECK(total == data.size());
}

TEST_CASE("huge concentration drives label-skew toward the iid class balance") {
  dataset::Dataset data = dataset::synth_two_class(2000, 3, 0.3, 7);
  auto parts = dataset::partition_data(data, 4, dataset::PartitionMode::LabelSkew, 1e9, 3);
  for (const auto& part : parts) {
    REQUIRE(part.size() > 0);
    double positives = 0;
    for (double target : part.targets) positives += target;
    double ratio = positives / static_cast<double>(part.size());
    CHECK(ratio == doctest::Approx(0.5).epsilon(0.08));
  }
}

TEST_CASE("partition rejects more parties than samples") {
  dataset::Dataset data = dataset::synth_two_class(3, 2, 0.1, 1);
  CHECK_THROWS_AS(dataset::partition_data(data, 4, dataset::PartitionMode::Iid, 0.5, 1), Error);
}

TEST_CASE("csv datasets load with an optional header and drive a run") {
  auto path = std::filesystem::temp_directory_path() / "tapfed_harness_data.csv";
  {
    std::ofstream out(path, std::ios::trunc);
    out << "f0,f1,label\n";
    dataset::Dataset synth = dataset::synth_two_class(120, 2, 0.3, 77);
    for (std::size_t i = 0; i < synth.size(); ++i) {
      out << synth.features[i][0] << ',' << synth.features[i][1] << ',' << synth.targets[i]
          << '\n';
    }
  }
  dataset::Dataset loaded = dataset::load_csv(path.string());
  CHECK(loaded.size() == 120);
  CHECK(loaded.feature_count() == 2);

  ExperimentConfig cfg = small_config();
  cfg.max_rounds_q = 1;
  cfg.trainer.features = 2;
  cfg.dataset_csv = path.string();
  ExperimentResult result = run_experiment(cfg);
  CHECK(result.rounds[0].completed);

  CHECK_THROWS_AS(dataset::load_csv("/nonexistent/data.csv"), Error);
}

TEST_CASE("toy logistic trainer separates the synthetic blobs") {
  dataset::Dataset data = dataset::synth_two_class(400, 4, 0.3, 8);
  auto split = dataset::split_train_test(data, 0.25, 9);
  trainer::ToyModel model = trainer::ToyModel::zeros(trainer::ModelFamily::LogisticRegression, 4);
  double last = 1e9;
  for (int round = 0; round < 20; ++round) {
    last = trainer::train_local(model, split.train, {0.5, 2});
  }
  CHECK(last < 0.3);
  CHECK(trainer::evaluate_accuracy(model, split.test) > 0.9);
}

TEST_CASE("honest rounds match the plaintext weighted average oracle") {
  ExperimentConfig cfg = small_config();
  cfg.max_rounds_q = 5;
  ExperimentResult result = run_experiment(cfg);
  REQUIRE(result.rounds.size() == 5);
  const double bound = (cfg.n_parties + 1) * std::pow(10.0, -cfg.pr);
  for (const RoundRecord& rec : result.rounds) {
    CHECK(rec.completed);
    CHECK(rec.max_deviation <= bound);
    CHECK(rec.recovered_update.size() == cfg.trainer.features + 1);
  }
  CHECK(result.rounds_completed == 5);
  // Separable synthetic data: training loss trends downward over rounds.
  CHECK(result.rounds.back().train_loss_mean < result.rounds.front().train_loss_mean);
}

TEST_CASE("fixed seeds reproduce the round records exactly") {
  ExperimentConfig cfg = small_config();
  ExperimentResult a = run_experiment(cfg);
  ExperimentResult b = run_experiment(cfg);
  REQUIRE(a.rounds.size() == b.rounds.size());
  for (std::size_t k = 0; k < a.rounds.size(); ++k) {
    CHECK(a.rounds[k].recovered_update == b.rounds[k].recovered_update);
    CHECK(a.rounds[k].party_losses == b.rounds[k].party_losses);
    CHECK(a.rounds[k].events == b.rounds[k].events);
    CHECK(a.rounds[k].total_bytes == b.rounds[k].total_bytes);
  }
  CHECK(a.final_model == b.final_model);
}

TEST_CASE("the transport refuses any aggregator-to-aggregator send") {
  Transport transport;
  transport.register_entity("a1", Role::Aggregator);
  transport.register_entity("a2", Role::Aggregator);
  transport.register_entity("p1", Role::Party);
  CHECK_THROWS_AS(transport.send("a1", "a2", wire::MessageKind::Partial, 1, "x"), Error);
  try {
    transport.send("a1", "a2", wire::MessageKind::Partial, 1, "x");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::no_peer_channel);
  }
  transport.send("a1", "p1", wire::MessageKind::Partial, 1, "x");
  CHECK(transport.drain("p1").size() == 1);
}

TEST_CASE("aggregator dropout before and after receipt both leave the round alive") {
  ExperimentConfig cfg = small_config();
  cfg.s_aggregators = 5;
  cfg.threshold_t = 3;
  cfg.dropout_schedule[2] = {{"a2", DropPhase::BeforeReceipt}, {"a4", DropPhase::AfterReceipt}};
  ExperimentResult result = run_experiment(cfg);
  const RoundRecord& dropped = result.rounds[1];
  CHECK(dropped.completed);
  CHECK(dropped.max_deviation <= (cfg.n_parties + 1) * std::pow(10.0, -cfg.pr));
  bool before = false, after = false;
  for (const std::string& event : dropped.events) {
    if (event == "dropout:a2:before") before = true;
    if (event == "dropout:a4:after") after = true;
  }
  CHECK(before);
  CHECK(after);
}

TEST_CASE("party dropout renormalizes onto the survivors") {
  ExperimentConfig cfg = small_config();
  cfg.dropout_schedule[2] = {{"p3", DropPhase::BeforeReceipt}};
  ExperimentResult result = run_experiment(cfg);
  const RoundRecord& dropped = result.rounds[1];
  CHECK(dropped.completed);
  CHECK(std::isnan(dropped.party_losses[2]));
  CHECK(dropped.max_deviation <= (cfg.n_parties + 1) * std::pow(10.0, -cfg.pr));
}

TEST_CASE("too many aggregator dropouts fail the round without killing the run") {
  ExperimentConfig cfg = small_config();
  cfg.s_aggregators = 3;
  cfg.threshold_t = 3;
  cfg.dropout_schedule[2] = {{"a1", DropPhase::BeforeReceipt}};
  ExperimentResult result = run_experiment(cfg);
  CHECK_FALSE(result.rounds[1].completed);
  CHECK(result.rounds[0].completed);
  CHECK(result.rounds[2].completed);
}

TEST_CASE("dropout monotonicity: supersets of a working responder set also work") {
  ExperimentConfig cfg = small_config();
  cfg.s_aggregators = 4;
  cfg.threshold_t = 2;
  Simulation sim(cfg);
  sim.run_round(1);
  const RoundArtifacts& artifacts = sim.last_artifacts();
  REQUIRE(artifacts.partials.size() == 4);

  tdsa::PartyState probe;
  probe.id = "p1";
  probe.sk = sim.infra().party_key("p1");
  probe.enc = cfg.encoding();

  std::vector<tdsa::ModelPartial> all;
  for (const auto& [id, partial] : artifacts.partials) all.push_back(partial);
  std::vector<double> base = tdsa::tdsa_recover(probe, {all[0], all[1]}, probe.enc);
  for (std::size_t extra = 2; extra < all.size(); ++extra) {
    std::vector<tdsa::ModelPartial> superset(all.begin(), all.begin() + extra + 1);
    CHECK(tdsa::tdsa_recover(probe, superset, probe.enc) == base);
  }
}

TEST_CASE("config files parse with sections, comments and overrides") {
  const std::string text =
      "[experiment]\n"
      "parties = 4\n"
      "aggregators = 3   # trailing comment\n"
      "threshold = 2\n"
      "rounds = 2\n"
      "; full-line comment\n"
      "[trainer]\n"
      "features = 6\n"
      "[dropout]\n"
      "2 = a2:before, p1:before\n";
  configfile::KvMap kv = configfile::parse_text(text);
  configfile::apply_override(kv, "experiment.parties=5");
  ExperimentConfig cfg = ExperimentConfig::from_kv(kv);
  CHECK(cfg.n_parties == 5);
  CHECK(cfg.s_aggregators == 3);
  CHECK(cfg.trainer.features == 6);
  REQUIRE(cfg.dropout_schedule.count(2) == 1);
  CHECK(cfg.dropout_schedule[2].size() == 2);
  CHECK(cfg.dropout_schedule[2][0].entity_id == "a2");
}

TEST_CASE("config validation catches inconsistencies before round one") {
  ExperimentConfig cfg = small_config();
  cfg.threshold_t = 9;
  CHECK_THROWS_AS(cfg.validate(), Error);

  ExperimentConfig bad_dropout = small_config();
  bad_dropout.dropout_schedule[1] = {{"a9", DropPhase::BeforeReceipt}};
  CHECK_THROWS_AS(bad_dropout.validate(), Error);

  ExperimentConfig bad_adversary = small_config();
  bad_adversary.adversary = AdversarySpec{"p1", "tamper", 1};
  CHECK_THROWS_AS(bad_adversary.validate(), Error);
}

TEST_CASE("fedavg fusion with skewed partitions matches its weighted oracle") {
  ExperimentConfig cfg = small_config();
  cfg.fusion_mode = codec::FusionMode::FedAvg;
  cfg.trainer.partition = dataset::PartitionMode::LabelSkew;
  cfg.trainer.concentration = 0.7;
  ExperimentResult result = run_experiment(cfg);
  const double bound = (cfg.n_parties + 1) * std::pow(10.0, -cfg.pr);
  for (const RoundRecord& rec : result.rounds) {
    CHECK(rec.completed);
    CHECK(rec.max_deviation <= bound);
  }
}

TEST_CASE("personalized fusion uses the configured per-party weights") {
  ExperimentConfig cfg = small_config();
  cfg.fusion_mode = codec::FusionMode::Personalized;
  cfg.personalized_weights = {{"p1", 0.5}, {"p2", 0.3}, {"p3", 0.2}};
  ExperimentResult result = run_experiment(cfg);
  for (const RoundRecord& rec : result.rounds) {
    CHECK(rec.completed);
    CHECK(rec.max_deviation <= (cfg.n_parties + 1) * std::pow(10.0, -cfg.pr));
  }

  ExperimentConfig missing = cfg;
  missing.personalized_weights.erase("p2");
  CHECK_THROWS_AS(missing.validate(), Error);
}

TEST_CASE("a dp-enabled run completes and flags its updates") {
  ExperimentConfig cfg = small_config();
  cfg.dp_enabled = true;
  cfg.dp.mechanism = tdsa::DpConfig::Mechanism::Gaussian;
  cfg.dp.scale = 0.01;
  ExperimentResult result = run_experiment(cfg);
  for (const RoundRecord& rec : result.rounds) CHECK(rec.completed);
  // Noise shifts the aggregate away from the noiseless oracle, but only by
  // about scale/n per party contribution.
  CHECK(result.rounds[0].max_deviation < 0.1);
}

TEST_CASE("secure and plaintext runs stay close in accuracy") {
  ExperimentConfig cfg = small_config();
  cfg.max_rounds_q = 5;
  ExperimentResult secure = run_experiment(cfg);
  ExperimentResult plain = run_plaintext_experiment(cfg);
  CHECK(std::abs(secure.final_accuracy - plain.final_accuracy) <= 0.01 + 1e-12);
}

TEST_CASE("attack scenario verdicts all match their expectations") {
  ExperimentConfig cfg = small_config();
  for (Scenario scenario : all_scenarios()) {
    ScenarioVerdict verdict = run_attack_scenario(scenario, cfg);
    INFO(verdict.scenario, ": ", verdict.notes);
    CHECK(verdict.matches_expectation);
  }
  CHECK_THROWS_AS(scenario_from_name("nope"), Error);
}

TEST_CASE("round record csv is stable across reruns") {
  ExperimentConfig cfg = small_config();
  ExperimentResult a = run_experiment(cfg);
  ExperimentResult b = run_experiment(cfg);
  auto tmp = std::filesystem::temp_directory_path();
  std::string path_a = (tmp / "harness_rounds_a.csv").string();
  std::string path_b = (tmp / "harness_rounds_b.csv").string();
  write_rounds_csv(path_a, a, cfg.n_parties);
  write_rounds_csv(path_b, b, cfg.n_parties);
  std::ifstream in_a(path_a), in_b(path_b);
  std::stringstream sa, sb;
  sa << in_a.rdbuf();
  sb << in_b.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(sa.str().find("round,completed") == 0);
}
