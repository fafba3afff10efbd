// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tapfed/configfile.hpp"
#include "tapfed/dataset.hpp"
#include "tapfed/tdsa.hpp"
#include "tapfed/trainer.hpp"
#include "tapfed/wire.hpp"

namespace tapfed::harness {

// In-process simulation of the full training loop: parties with a toy
// trainer, independent aggregators, the crypto infrastructure, a message
// transport with dropout schedules, and adversary plugins. Everything is
// driven from one master seed; two runs with the same config produce
// identical records.

enum class DropPhase { BeforeReceipt, AfterReceipt };

struct DropoutEvent {
  std::string entity_id;  // "p3" or "a2"
  DropPhase phase = DropPhase::BeforeReceipt;
};

struct AdversarySpec {
  std::string role_id;     // which aggregator misbehaves
  std::string behavior;    // isolation | replay | tamper
  std::uint64_t round = 0; // first round the behavior triggers
};

struct TrainerSpec {
  trainer::ModelFamily family = trainer::ModelFamily::LogisticRegression;
  unsigned features = 8;
  unsigned samples = 500;
  double learning_rate = 0.5;
  double data_noise = 0.35;
  double test_fraction = 0.2;
  dataset::PartitionMode partition = dataset::PartitionMode::Iid;
  double concentration = 0.5;
};

struct ExperimentConfig {
  unsigned n_parties = 5;
  unsigned s_aggregators = 2;
  unsigned threshold_t = 2;
  unsigned trust_threshold = 0;   // 0 -> threshold_t
  unsigned max_rounds_q = 20;
  unsigned local_epochs = 2;
  unsigned min_parties = 1;       // party quorum for a round to proceed
  unsigned min_aggregators = 0;   // 0 -> threshold_t
  unsigned lambda_bits = 32;
  std::uint64_t seed = 1;

  codec::FusionMode fusion_mode = codec::FusionMode::IterAvg;
  std::map<std::string, double> personalized_weights;

  int pr = 4;
  int prw = 4;
  double value_bound = 8.0;
  double max_weight = 1.0;

  TrainerSpec trainer;
  std::optional<std::string> dataset_csv;

  std::map<std::uint64_t, std::vector<DropoutEvent>> dropout_schedule;
  std::optional<AdversarySpec> adversary;

  bool dp_enabled = false;
  tdsa::DpConfig dp;

  codec::EncodingConfig encoding() const;
  void validate() const;

  static ExperimentConfig from_kv(const configfile::KvMap& kv);
};

enum class Role { Party, Aggregator, Infrastructure };

// Deterministic in-process message fabric with per-edge byte accounting.
// There is no aggregator-to-aggregator channel at all: such a send throws.
class Transport {
 public:
  // Interceptor runs at the send boundary; it may mutate the envelope or
  // return false to withhold delivery.
  using Interceptor =
      std::function<bool(const std::string& from, const std::string& to, wire::Envelope&)>;

  void register_entity(const std::string& id, Role role);
  void set_interceptor(Interceptor interceptor) { interceptor_ = std::move(interceptor); }

  void send(const std::string& from, const std::string& to, wire::MessageKind kind,
            std::uint64_t round, serial::Bytes payload);
  std::vector<wire::Envelope> drain(const std::string& to);

  const std::map<std::pair<std::string, std::string>, std::uint64_t>& edge_bytes() const {
    return edge_bytes_;
  }
  // Every envelope an entity ever saw, incoming and outgoing.
  const std::vector<wire::Envelope>& transcript(const std::string& id) const;

 private:
  std::map<std::string, Role> roles_;
  std::map<std::string, std::vector<wire::Envelope>> mailboxes_;
  std::map<std::string, std::vector<wire::Envelope>> transcripts_;
  std::map<std::pair<std::string, std::string>, std::uint64_t> edge_bytes_;
  Interceptor interceptor_;
};

struct PhaseTimes {
  double train_ms = 0;
  double protect_ms = 0;
  double aggregate_ms = 0;
  double recover_ms = 0;
};

struct EdgeBytes {
  std::string from;
  std::string to;
  std::uint64_t bytes = 0;
};

struct RoundRecord {
  std::uint64_t round_index = 0;
  bool completed = false;
  std::vector<double> party_losses;        // per party; NaN when dropped
  std::vector<double> recovered_update;    // empty when the round failed
  std::vector<double> plaintext_average;   // oracle over the surviving set
  double max_deviation = 0.0;              // inf-norm versus the oracle
  double train_loss_mean = 0.0;
  double test_accuracy = 0.0;
  std::uint64_t ciphertext_bytes_per_party = 0;
  std::uint64_t partial_bytes_total = 0;
  std::uint64_t dk_bytes_total = 0;
  std::uint64_t total_bytes = 0;
  std::vector<EdgeBytes> bytes_per_edge;
  PhaseTimes times;
  std::vector<std::string> events;
};

struct ExperimentResult {
  std::vector<RoundRecord> rounds;
  std::vector<double> final_model;
  double final_accuracy = 0.0;
  double final_loss = 0.0;
  std::uint64_t total_bytes = 0;
  double total_seconds = 0.0;
  unsigned rounds_completed = 0;
};

// Everything a post-hoc attack analysis may legitimately hold: the round's
// public messages plus whatever the coalition's own members produced.
struct RoundArtifacts {
  tdsa::RoundLabel label;
  std::vector<tdsa::ProtectedUpdate> updates;
  std::map<std::string, tdsa::KeyGrant> grants;
  std::map<std::string, tdsa::ModelPartial> partials;
  std::vector<double> recovered;
  std::vector<std::vector<double>> submitted_plaintexts;  // harness-side oracle only
};

class Simulation {
 public:
  explicit Simulation(const ExperimentConfig& cfg);

  RoundRecord run_round(std::uint64_t k);
  ExperimentResult run_experiment();

  const ExperimentConfig& config() const { return cfg_; }
  tdsa::CryptoInfrastructure& infra() { return *infra_; }
  Transport& transport() { return transport_; }
  const RoundArtifacts& last_artifacts() const { return artifacts_; }
  const dataset::Dataset& test_set() const { return test_; }
  const std::vector<double>& global_model() const { return global_model_; }

 private:
  struct PartyRuntime {
    tdsa::PartyState state;
    trainer::ToyModel model;
    dataset::Dataset data;
  };

  std::set<std::string> dropped(std::uint64_t k, DropPhase phase, char role_prefix) const;

  ExperimentConfig cfg_;
  codec::EncodingConfig enc_;
  std::unique_ptr<tdsa::CryptoInfrastructure> infra_;
  Transport transport_;
  std::vector<PartyRuntime> parties_;
  std::vector<tdsa::AggregatorState> aggregators_;
  dataset::Dataset test_;
  std::vector<double> global_model_;
  std::uint64_t rounds_run_ = 0;
  RoundArtifacts artifacts_;

  // adversary plumbing: per-party payloads from the current and previous
  // round (replay substitution pulls from the previous one)
  std::optional<AdversarySpec> adversary_;
  std::map<std::string, serial::Bytes> recorded_updates_;
  std::map<std::string, serial::Bytes> recorded_prev_;
  std::map<std::pair<std::string, std::string>, std::uint64_t> edge_snapshot_;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// The no-crypto reference run: identical data, training and dropout
// behavior, plaintext weighted averaging.
ExperimentResult run_plaintext_experiment(const ExperimentConfig& cfg);

enum class Scenario { Isolation, Replay, Collusion, DisaggregationProbe, Tamper };

Scenario scenario_from_name(const std::string& name);
std::string_view scenario_name(Scenario scenario);
std::vector<Scenario> all_scenarios();

struct ScenarioVerdict {
  std::string scenario;
  bool prevented = false;           // attack blocked / no leak found
  bool boundary_succeeded = false;  // collusion only: coalition of t wins
  bool matches_expectation = false;
  std::string notes;
};

ScenarioVerdict run_attack_scenario(Scenario scenario, const ExperimentConfig& cfg);

// Artifact writers (atomic: write to a temp file, then rename).
void write_rounds_csv(const std::string& path, const ExperimentResult& result,
                      unsigned n_parties);
void write_timings_csv(const std::string& path, const ExperimentResult& result);
void write_payload_csv(const std::string& path, const ExperimentResult& result,
                       const ExperimentConfig& cfg);
void write_summary_json(const std::string& path, const ExperimentResult& result,
                        const ExperimentConfig& cfg, double plaintext_accuracy);
void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace tapfed::harness
