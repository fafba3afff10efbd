// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.
//
// Operator entry point: key ceremony demos, experiment runs, attack
// scenarios and microbenchmarks.
//
//   tapfed keygen --config cfg.ini --out keys/
//   tapfed run    --config cfg.ini --out results/ [--seed N] [--set k=v]
//   tapfed attack --config cfg.ini --out results/ [--scenario name]
//   tapfed bench  --config cfg.ini --out results/
//
// Exit codes: 0 success, 2 config error, 3 scenario-expectation failure.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tapfed/error.hpp"
#include "tapfed/harness.hpp"
#include "tapfed/serial.hpp"
#include "tapfed/tdsa.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitScenario = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Experiment config file")->required();
  cmd->add_option("--out", args.out_dir, "Output directory");
  cmd->add_option("--seed", args.seed, "Master seed override")->each([&](const std::string&) {
    args.seed_set = true;
  });
  cmd->add_option("--set", args.overrides, "Repeatable section.key=value override");
}

tapfed::harness::ExperimentConfig load_config(const CommonArgs& args) {
  tapfed::configfile::KvMap kv = tapfed::configfile::parse_file(args.config_path);
  for (const std::string& assignment : args.overrides) {
    tapfed::configfile::apply_override(kv, assignment);
  }
  if (args.seed_set) kv["experiment.seed"] = std::to_string(args.seed);
  return tapfed::harness::ExperimentConfig::from_kv(kv);
}

std::string out_path(const CommonArgs& args, const std::string& name) {
  std::filesystem::create_directories(args.out_dir);
  return (std::filesystem::path(args.out_dir) / name).string();
}

int cmd_run(const CommonArgs& args) {
  tapfed::harness::ExperimentConfig cfg = load_config(args);
  std::cout << "run: " << cfg.n_parties << " parties, " << cfg.s_aggregators
            << " aggregators (t=" << cfg.threshold_t << "), " << cfg.max_rounds_q
            << " rounds, lambda=" << cfg.lambda_bits << "\n";

  tapfed::harness::ExperimentResult result = tapfed::harness::run_experiment(cfg);
  tapfed::harness::ExperimentResult plain = tapfed::harness::run_plaintext_experiment(cfg);

  tapfed::harness::write_rounds_csv(out_path(args, "rounds.csv"), result, cfg.n_parties);
  tapfed::harness::write_timings_csv(out_path(args, "timings.csv"), result);
  tapfed::harness::write_payload_csv(out_path(args, "payload.csv"), result, cfg);
  tapfed::harness::write_summary_json(out_path(args, "summary.json"), result, cfg,
                                      plain.final_accuracy);

  std::cout << "rounds completed: " << result.rounds_completed << "/" << cfg.max_rounds_q
            << "\nfinal accuracy:   " << result.final_accuracy
            << " (plaintext " << plain.final_accuracy << ")"
            << "\ntotal bytes:      " << result.total_bytes
            << "\nartifacts in:     " << args.out_dir << "\n";
  return kExitOk;
}

int cmd_attack(const CommonArgs& args, const std::string& scenario_name) {
  tapfed::harness::ExperimentConfig cfg = load_config(args);

  std::vector<tapfed::harness::Scenario> scenarios;
  if (scenario_name.empty() || scenario_name == "all") {
    scenarios = tapfed::harness::all_scenarios();
  } else {
    scenarios.push_back(tapfed::harness::scenario_from_name(scenario_name));
  }

  bool all_matched = true;
  std::ostringstream json;
  json << "[\n";
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    tapfed::harness::ScenarioVerdict verdict =
        tapfed::harness::run_attack_scenario(scenarios[i], cfg);
    all_matched = all_matched && verdict.matches_expectation;
    std::cout << verdict.scenario << ": "
              << (verdict.matches_expectation ? "expected" : "UNEXPECTED") << " ("
              << verdict.notes << ")\n";
    json << "  {\"scenario\": \"" << verdict.scenario << "\", \"prevented\": "
         << (verdict.prevented ? "true" : "false") << ", \"boundary_succeeded\": "
         << (verdict.boundary_succeeded ? "true" : "false") << ", \"matches_expectation\": "
         << (verdict.matches_expectation ? "true" : "false") << ", \"notes\": \""
         << verdict.notes << "\"}" << (i + 1 < scenarios.size() ? "," : "") << "\n";
  }
  json << "]\n";
  tapfed::harness::write_text_atomic(out_path(args, "verdicts.json"), json.str());
  return all_matched ? kExitOk : kExitScenario;
}

int cmd_keygen(const CommonArgs& args) {
  tapfed::harness::ExperimentConfig cfg = load_config(args);
  std::vector<std::string> parties, aggregators;
  for (unsigned i = 0; i < cfg.n_parties; ++i) parties.push_back("p" + std::to_string(i + 1));
  for (unsigned j = 0; j < cfg.s_aggregators; ++j) {
    aggregators.push_back("a" + std::to_string(j + 1));
  }
  const unsigned dim = cfg.trainer.features + 1;

  std::cout << "generating " << cfg.lambda_bits << "-bit group and master key for "
            << cfg.n_parties << " parties / " << cfg.s_aggregators << " aggregators...\n";
  tapfed::tdsa::CryptoInfrastructure infra(cfg.lambda_bits, parties, aggregators, dim,
                                           cfg.threshold_t, cfg.trust_threshold,
                                           tapfed::mix_seed(cfg.seed, 1));

  const tapfed::tmcfe::PublicParams& pp = infra.master_params();
  tapfed::harness::write_text_atomic(out_path(args, "group.txt"), pp.group.to_text());
  tapfed::harness::write_text_atomic(out_path(args, "pp.bin"), tapfed::serial::encode(pp));
  for (const std::string& id : parties) {
    tapfed::harness::write_text_atomic(out_path(args, "party_" + id + ".key"),
                                       tapfed::serial::encode(infra.party_key(id)));
  }
  std::cout << "group:      " << out_path(args, "group.txt")
            << "\npublic:     " << out_path(args, "pp.bin")
            << "\nparty keys: " << parties.size() << " files under " << args.out_dir
            << "\nkey shares are issued per round through DK compliance, not at ceremony time\n";
  return kExitOk;
}

int cmd_bench(const CommonArgs& args) {
  using Clock = std::chrono::steady_clock;
  tapfed::harness::ExperimentConfig cfg = load_config(args);
  tapfed::codec::EncodingConfig enc = cfg.encoding();

  std::ostringstream csv;
  csv << "op,eta,reps,total_ms,us_per_coordinate\n";
  auto emit = [&](const std::string& op, unsigned eta, unsigned reps, double total_ms) {
    double per = total_ms * 1000.0 / (static_cast<double>(reps) * eta);
    csv << op << ',' << eta << ',' << reps << ',' << total_ms << ',' << per << "\n";
    std::cout << op << " eta=" << eta << ": " << per << " us/coordinate\n";
  };

  for (unsigned eta : {8u, 16u, 32u}) {
    std::vector<std::string> parties{"p1", "p2"};
    std::vector<std::string> aggregators{"a1", "a2"};
    tapfed::tdsa::CryptoInfrastructure infra(cfg.lambda_bits, parties, aggregators, eta, 2, 0,
                                             tapfed::mix_seed(cfg.seed, eta));
    tapfed::tdsa::PartyState p1{"p1", infra.party_key("p1"), enc, 10, {}};
    tapfed::tdsa::PartyState p2{"p2", infra.party_key("p2"), enc, 10, {}};
    tapfed::tdsa::AggregatorState a1{"a1", 1, tapfed::codec::FusionMode::IterAvg, enc, {}};
    tapfed::tdsa::AggregatorState a2{"a2", 2, tapfed::codec::FusionMode::IterAvg, enc, {}};
    std::vector<double> update(eta, 0.25);

    const unsigned reps = 8;
    auto start = Clock::now();
    std::vector<std::vector<tapfed::tdsa::ProtectedUpdate>> rounds;
    for (unsigned rep = 0; rep < reps; ++rep) {
      tapfed::tdsa::RoundLabel label = tapfed::tdsa::RoundLabel::for_round(rep + 1);
      rounds.push_back({tapfed::tdsa::tdsa_protect(p1, update, label, std::nullopt, rep),
                        tapfed::tdsa::tdsa_protect(p2, update, label, std::nullopt, 100 + rep)});
    }
    double protect_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    emit("encrypt", eta, reps * 2, protect_ms);

    start = Clock::now();
    std::vector<std::vector<tapfed::tdsa::ModelPartial>> partials(reps);
    for (unsigned rep = 0; rep < reps; ++rep) {
      tapfed::tdsa::RoundLabel label = tapfed::tdsa::RoundLabel::for_round(rep + 1);
      auto expected = infra.aggregator_id_set();
      auto o1 = tapfed::tdsa::tdsa_aggregate(a1, rounds[rep], label, infra, expected);
      auto o2 = tapfed::tdsa::tdsa_aggregate(a2, rounds[rep], label, infra, expected);
      o1 = tapfed::tdsa::tdsa_aggregate(a1, rounds[rep], label, infra, expected);
      partials[rep] = {*o1.partial, *o2.partial};
    }
    double aggregate_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    emit("share_decrypt", eta, reps * 2, aggregate_ms);

    start = Clock::now();
    for (unsigned rep = 0; rep < reps; ++rep) {
      tapfed::tdsa::tdsa_recover(p1, partials[rep], enc);
    }
    double recover_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    emit("combine_dlog", eta, reps, recover_ms);
  }

  tapfed::harness::write_text_atomic(out_path(args, "bench.csv"), csv.str());
  std::cout << "wrote " << out_path(args, "bench.csv") << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"threshold secure aggregation toolkit"};
  app.require_subcommand(1);

  CommonArgs run_args, attack_args, keygen_args, bench_args;
  std::string scenario;

  CLI::App* run = app.add_subcommand("run", "Run a federated training experiment");
  add_common(run, run_args);
  CLI::App* attack = app.add_subcommand("attack", "Run adversary scenarios");
  add_common(attack, attack_args);
  attack->add_option("--scenario", scenario,
                     "isolation | replay | tamper | collusion | disaggregation-probe | all");
  CLI::App* keygen = app.add_subcommand("keygen", "Key ceremony demo");
  add_common(keygen, keygen_args);
  CLI::App* bench = app.add_subcommand("bench", "Per-operation microbenchmarks");
  add_common(bench, bench_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(run_args);
    if (attack->parsed()) return cmd_attack(attack_args, scenario);
    if (keygen->parsed()) return cmd_keygen(keygen_args);
    if (bench->parsed()) return cmd_bench(bench_args);
  } catch (const tapfed::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
