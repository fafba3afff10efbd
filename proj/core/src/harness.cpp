// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#include "tapfed/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "tapfed/error.hpp"
#include "tapfed/serial.hpp"

namespace tapfed::harness {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string party_id(unsigned i) { return "p" + std::to_string(i + 1); }
std::string aggregator_id(unsigned j) { return "a" + std::to_string(j + 1); }

}  // namespace

codec::EncodingConfig ExperimentConfig::encoding() const {
  return codec::EncodingConfig::make(pr, prw, value_bound, n_parties, max_weight);
}

void ExperimentConfig::validate() const {
  if (n_parties == 0) fail(Errc::config_error, "need at least one party");
  if (s_aggregators == 0) fail(Errc::config_error, "need at least one aggregator");
  if (threshold_t < 1 || threshold_t > s_aggregators) {
    fail(Errc::config_error, "threshold must satisfy 1 <= t <= s");
  }
  if (trust_threshold > s_aggregators) {
    fail(Errc::config_error, "trust_threshold exceeds the aggregator count");
  }
  if (max_rounds_q < 1) fail(Errc::config_error, "need at least one round");
  if (lambda_bits < 8) fail(Errc::config_error, "lambda_bits below the 8-bit floor");
  if (trainer.features == 0) fail(Errc::config_error, "model needs at least one feature");
  encoding();  // throws on inconsistent precision settings

  auto known_entity = [&](const std::string& id) {
    if (id.size() < 2) return false;
    unsigned index = 0;
    try {
      index = static_cast<unsigned>(std::stoul(id.substr(1)));
    } catch (const std::exception&) {
      return false;
    }
    if (id[0] == 'p') return index >= 1 && index <= n_parties;
    if (id[0] == 'a') return index >= 1 && index <= s_aggregators;
    return false;
  };
  for (const auto& [round, events] : dropout_schedule) {
    if (round < 1 || round > max_rounds_q) {
      fail(Errc::config_error, "dropout scheduled outside [1, rounds]");
    }
    for (const DropoutEvent& event : events) {
      if (!known_entity(event.entity_id)) {
        fail(Errc::config_error, "dropout names unknown entity: " + event.entity_id);
      }
    }
  }
  if (adversary) {
    if (!known_entity(adversary->role_id) || adversary->role_id[0] != 'a') {
      fail(Errc::config_error, "adversary must name an aggregator");
    }
    if (adversary->behavior != "isolation" && adversary->behavior != "replay" &&
        adversary->behavior != "tamper") {
      fail(Errc::config_error, "unknown adversary behavior: " + adversary->behavior);
    }
    if (adversary->behavior == "replay" && adversary->round < 2) {
      fail(Errc::config_error, "replay needs a previous round to replay from");
    }
  }
  if (fusion_mode == codec::FusionMode::Personalized) {
    for (unsigned i = 0; i < n_parties; ++i) {
      if (!personalized_weights.count(party_id(i))) {
        fail(Errc::config_error, "personalized fusion needs a weight for every party");
      }
    }
  }
}

ExperimentConfig ExperimentConfig::from_kv(const configfile::KvMap& kv) {
  using namespace configfile;
  ExperimentConfig cfg;
  cfg.n_parties = static_cast<unsigned>(get_u64_or(kv, "experiment.parties", cfg.n_parties));
  cfg.s_aggregators =
      static_cast<unsigned>(get_u64_or(kv, "experiment.aggregators", cfg.s_aggregators));
  cfg.threshold_t = static_cast<unsigned>(get_u64_or(kv, "experiment.threshold", cfg.threshold_t));
  cfg.trust_threshold =
      static_cast<unsigned>(get_u64_or(kv, "experiment.trust_threshold", cfg.trust_threshold));
  cfg.max_rounds_q = static_cast<unsigned>(get_u64_or(kv, "experiment.rounds", cfg.max_rounds_q));
  cfg.local_epochs =
      static_cast<unsigned>(get_u64_or(kv, "experiment.local_epochs", cfg.local_epochs));
  cfg.min_parties = static_cast<unsigned>(get_u64_or(kv, "experiment.min_parties", 1));
  cfg.min_aggregators = static_cast<unsigned>(get_u64_or(kv, "experiment.min_aggregators", 0));
  cfg.lambda_bits = static_cast<unsigned>(get_u64_or(kv, "experiment.lambda_bits", cfg.lambda_bits));
  cfg.seed = get_u64_or(kv, "experiment.seed", cfg.seed);
  cfg.fusion_mode = codec::fusion_mode_from_name(
      get_string_or(kv, "experiment.fusion", std::string(codec::fusion_mode_name(cfg.fusion_mode))));

  cfg.pr = static_cast<int>(get_u64_or(kv, "encoding.pr", cfg.pr));
  cfg.prw = static_cast<int>(get_u64_or(kv, "encoding.prw", cfg.prw));
  cfg.value_bound = get_double_or(kv, "encoding.value_bound", cfg.value_bound);
  cfg.max_weight = get_double_or(kv, "encoding.max_weight", cfg.max_weight);

  cfg.trainer.family = trainer::family_from_name(
      get_string_or(kv, "trainer.family", "logistic-regression"));
  cfg.trainer.features =
      static_cast<unsigned>(get_u64_or(kv, "trainer.features", cfg.trainer.features));
  cfg.trainer.samples =
      static_cast<unsigned>(get_u64_or(kv, "trainer.samples", cfg.trainer.samples));
  cfg.trainer.learning_rate = get_double_or(kv, "trainer.lr", cfg.trainer.learning_rate);
  cfg.trainer.data_noise = get_double_or(kv, "trainer.noise", cfg.trainer.data_noise);
  cfg.trainer.test_fraction =
      get_double_or(kv, "trainer.test_fraction", cfg.trainer.test_fraction);
  cfg.trainer.partition =
      dataset::partition_mode_from_name(get_string_or(kv, "trainer.partition", "iid"));
  cfg.trainer.concentration =
      get_double_or(kv, "trainer.concentration", cfg.trainer.concentration);
  if (has_key(kv, "trainer.dataset_csv")) {
    cfg.dataset_csv = get_string(kv, "trainer.dataset_csv");
  }

  // Dropout lines: "dropout.<round> = a2:before, a4:after, p5:before".
  for (const auto& [key, value] : kv) {
    if (key.rfind("dropout.", 0) != 0) continue;
    std::uint64_t round = 0;
    try {
      round = std::stoull(key.substr(8));
    } catch (const std::exception&) {
      fail(Errc::config_error, "dropout keys must be round numbers: " + key);
    }
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      std::size_t colon = item.find(':');
      DropoutEvent event;
      std::string id = colon == std::string::npos ? item : item.substr(0, colon);
      std::string phase = colon == std::string::npos ? "before" : item.substr(colon + 1);
      auto strip = [](std::string text) {
        std::size_t begin = text.find_first_not_of(" \t");
        std::size_t end = text.find_last_not_of(" \t");
        return begin == std::string::npos ? std::string() : text.substr(begin, end - begin + 1);
      };
      event.entity_id = strip(id);
      phase = strip(phase);
      if (phase == "before") {
        event.phase = DropPhase::BeforeReceipt;
      } else if (phase == "after") {
        event.phase = DropPhase::AfterReceipt;
      } else {
        fail(Errc::config_error, "dropout phase must be before or after: " + phase);
      }
      cfg.dropout_schedule[round].push_back(event);
    }
  }

  if (has_key(kv, "adversary.role")) {
    AdversarySpec spec;
    spec.role_id = get_string(kv, "adversary.role");
    spec.behavior = get_string(kv, "adversary.behavior");
    spec.round = get_u64_or(kv, "adversary.round", 1);
    cfg.adversary = spec;
  }

  cfg.dp_enabled = get_bool_or(kv, "dp.enabled", false);
  if (cfg.dp_enabled) {
    std::string mechanism = get_string_or(kv, "dp.mechanism", "gaussian");
    if (mechanism == "gaussian") {
      cfg.dp.mechanism = tdsa::DpConfig::Mechanism::Gaussian;
    } else if (mechanism == "laplace") {
      cfg.dp.mechanism = tdsa::DpConfig::Mechanism::Laplace;
    } else {
      fail(Errc::config_error, "unknown dp mechanism: " + mechanism);
    }
    cfg.dp.scale = get_double_or(kv, "dp.scale", 0.0);
  }

  for (const auto& [key, value] : kv) {
    if (key.rfind("personalized.", 0) != 0) continue;
    cfg.personalized_weights[key.substr(13)] = std::stod(value);
  }

  cfg.validate();
  return cfg;
}

void Transport::register_entity(const std::string& id, Role role) {
  roles_[id] = role;
  mailboxes_[id];
  transcripts_[id];
}

void Transport::send(const std::string& from, const std::string& to, wire::MessageKind kind,
                     std::uint64_t round, serial::Bytes payload) {
  auto from_it = roles_.find(from);
  auto to_it = roles_.find(to);
  if (from_it == roles_.end() || to_it == roles_.end()) {
    fail(Errc::config_error, "send between unregistered entities");
  }
  if (from_it->second == Role::Aggregator && to_it->second == Role::Aggregator) {
    fail(Errc::no_peer_channel, "aggregators have no peer channel: " + from + " -> " + to);
  }
  wire::Envelope env{kind, round, from, std::move(payload)};
  transcripts_[from].push_back(env);
  bool deliver = true;
  if (interceptor_) deliver = interceptor_(from, to, env);
  if (!deliver) return;
  edge_bytes_[{from, to}] += wire::pack(env).size();
  transcripts_[to].push_back(env);
  mailboxes_[to].push_back(std::move(env));
}

std::vector<wire::Envelope> Transport::drain(const std::string& to) {
  auto it = mailboxes_.find(to);
  if (it == mailboxes_.end()) fail(Errc::config_error, "unknown mailbox: " + to);
  std::vector<wire::Envelope> out;
  out.swap(it->second);
  return out;
}

const std::vector<wire::Envelope>& Transport::transcript(const std::string& id) const {
  auto it = transcripts_.find(id);
  if (it == transcripts_.end()) fail(Errc::config_error, "unknown transcript: " + id);
  return it->second;
}

Simulation::Simulation(const ExperimentConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  enc_ = cfg_.encoding();
  adversary_ = cfg_.adversary;

  // Data pipeline: source -> train/test split -> per-party partitions.
  dataset::Dataset source =
      cfg_.dataset_csv
          ? dataset::load_csv(*cfg_.dataset_csv)
          : dataset::synth_two_class(cfg_.trainer.samples, cfg_.trainer.features,
                                     cfg_.trainer.data_noise, mix_seed(cfg_.seed, 2));
  auto split = dataset::split_train_test(source, cfg_.trainer.test_fraction, mix_seed(cfg_.seed, 3));
  test_ = std::move(split.test);
  auto partitions = dataset::partition_data(split.train, cfg_.n_parties, cfg_.trainer.partition,
                                            cfg_.trainer.concentration, mix_seed(cfg_.seed, 4));

  std::vector<std::string> parties;
  std::vector<std::string> aggregators;
  for (unsigned i = 0; i < cfg_.n_parties; ++i) parties.push_back(party_id(i));
  for (unsigned j = 0; j < cfg_.s_aggregators; ++j) aggregators.push_back(aggregator_id(j));

  const unsigned model_dim = cfg_.trainer.features + 1;
  infra_ = std::make_unique<tdsa::CryptoInfrastructure>(
      cfg_.lambda_bits, parties, aggregators, model_dim, cfg_.threshold_t, cfg_.trust_threshold,
      mix_seed(cfg_.seed, 1));

  transport_.register_entity("infra", Role::Infrastructure);
  for (const std::string& id : parties) transport_.register_entity(id, Role::Party);
  for (const std::string& id : aggregators) transport_.register_entity(id, Role::Aggregator);

  parties_.reserve(cfg_.n_parties);
  for (unsigned i = 0; i < cfg_.n_parties; ++i) {
    PartyRuntime runtime;
    runtime.state.id = parties[i];
    runtime.state.sk = infra_->party_key(parties[i]);
    runtime.state.enc = enc_;
    runtime.state.sample_count = partitions[i].size();
    runtime.model = trainer::ToyModel::zeros(cfg_.trainer.family, cfg_.trainer.features);
    runtime.data = std::move(partitions[i]);
    parties_.push_back(std::move(runtime));
  }

  aggregators_.reserve(cfg_.s_aggregators);
  for (unsigned j = 0; j < cfg_.s_aggregators; ++j) {
    tdsa::AggregatorState state;
    state.id = aggregators[j];
    state.share_index = infra_->aggregator_share_index(aggregators[j]);
    state.mode = cfg_.fusion_mode;
    state.enc = enc_;
    state.personalized_weights = cfg_.personalized_weights;
    aggregators_.push_back(std::move(state));
  }

  global_model_.assign(model_dim, 0.0);

  if (adversary_) {
    const AdversarySpec spec = *adversary_;
    const GroupParams group = infra_->master_params().group;
    transport_.set_interceptor([this, spec, group](const std::string& from, const std::string& to,
                                                   wire::Envelope& env) {
      if (env.round_index != spec.round) return true;
      if (spec.behavior == "replay" && to == spec.role_id &&
          env.kind == wire::MessageKind::ProtectedUpdate) {
        auto it = recorded_prev_.find(from);
        if (it != recorded_prev_.end()) env.payload = it->second;
        return true;
      }
      if (spec.behavior == "isolation" && from == spec.role_id &&
          env.kind == wire::MessageKind::DkRequest) {
        tdsa::DkRequest request = serial::decode_dk_request(env.payload);
        // Participation vector that zeroes out the last party to isolate
        // the rest of the sum.
        for (std::size_t i = 0; i < request.fusion.weights.size(); ++i) {
          bool victim = i + 1 == request.fusion.weights.size();
          request.fusion.weights[i] = victim ? 0.0 : 1.0;
          request.fusion.scaled_weights[i] =
              victim ? 0
                     : static_cast<std::int64_t>(
                           std::llround(std::pow(10.0, request.fusion.weight_scale_prw)));
        }
        env.payload = serial::encode(request);
        return true;
      }
      if (spec.behavior == "tamper" && from == spec.role_id &&
          env.kind == wire::MessageKind::Partial) {
        tdsa::ModelPartial partial = serial::decode_model_partial(env.payload);
        for (auto& coord : partial.coords) {
          coord.ct0_agg = mod_mul(coord.ct0_agg, group.generator_g, group);
        }
        env.payload = serial::encode(partial, group);
        return true;
      }
      return true;
    });
  }
}

std::set<std::string> Simulation::dropped(std::uint64_t k, DropPhase phase,
                                          char role_prefix) const {
  std::set<std::string> out;
  auto it = cfg_.dropout_schedule.find(k);
  if (it == cfg_.dropout_schedule.end()) return out;
  for (const DropoutEvent& event : it->second) {
    if (event.entity_id.empty() || event.entity_id[0] != role_prefix) continue;
    if (role_prefix == 'p' || event.phase == phase) out.insert(event.entity_id);
  }
  return out;
}

RoundRecord Simulation::run_round(std::uint64_t k) {
  if (k != rounds_run_ + 1) fail(Errc::config_error, "rounds must run in order");
  rounds_run_ = k;

  RoundRecord rec;
  rec.round_index = k;
  rec.party_losses.assign(cfg_.n_parties, std::numeric_limits<double>::quiet_NaN());

  const tdsa::RoundLabel label = tdsa::RoundLabel::for_round(k);
  const GroupParams& group = infra_->master_params().group;

  const std::set<std::string> gone_parties = dropped(k, DropPhase::BeforeReceipt, 'p');
  const std::set<std::string> aggs_before = dropped(k, DropPhase::BeforeReceipt, 'a');
  const std::set<std::string> aggs_after = dropped(k, DropPhase::AfterReceipt, 'a');

  for (const std::string& id : gone_parties) rec.events.push_back("dropout:" + id + ":before");
  for (const std::string& id : aggs_before) rec.events.push_back("dropout:" + id + ":before");
  for (const std::string& id : aggs_after) rec.events.push_back("dropout:" + id + ":after");

  std::vector<unsigned> live_party_idx;
  for (unsigned i = 0; i < cfg_.n_parties; ++i) {
    if (!gone_parties.count(parties_[i].state.id)) live_party_idx.push_back(i);
  }
  std::vector<unsigned> receiver_idx;
  std::vector<unsigned> actor_idx;
  for (unsigned j = 0; j < cfg_.s_aggregators; ++j) {
    const std::string& id = aggregators_[j].id;
    if (aggs_before.count(id)) continue;
    receiver_idx.push_back(j);
    if (!aggs_after.count(id)) actor_idx.push_back(j);
  }

  const unsigned party_quorum = std::max(cfg_.min_parties, 1u);
  const unsigned agg_quorum =
      cfg_.min_aggregators == 0 ? cfg_.threshold_t : cfg_.min_aggregators;
  if (live_party_idx.size() < party_quorum || actor_idx.size() < agg_quorum) {
    rec.events.push_back("round-failed:quorum");
    return rec;
  }

  artifacts_ = RoundArtifacts{};
  artifacts_.label = label;

  // Local training.
  auto train_start = Clock::now();
  for (unsigned i : live_party_idx) {
    PartyRuntime& party = parties_[i];
    trainer::TrainParams params{cfg_.trainer.learning_rate, cfg_.local_epochs};
    rec.party_losses[i] = trainer::train_local(party.model, party.data, params);
  }
  rec.times.train_ms = ms_since(train_start);

  // Protect and deliver to every aggregator that has not dropped before
  // receipt.
  auto protect_start = Clock::now();
  recorded_prev_ = std::move(recorded_updates_);
  recorded_updates_.clear();
  const std::optional<tdsa::DpConfig> dp =
      cfg_.dp_enabled ? std::optional<tdsa::DpConfig>(cfg_.dp) : std::nullopt;
  for (unsigned i : live_party_idx) {
    PartyRuntime& party = parties_[i];
    tdsa::ProtectedUpdate update = tdsa_protect(
        party.state, party.model.weights, label, dp, mix_seed(cfg_.seed, 1000 * k + i));
    serial::Bytes payload = serial::encode(update, group);
    recorded_updates_[party.state.id] = payload;
    artifacts_.updates.push_back(update);
    artifacts_.submitted_plaintexts.push_back(party.model.weights);
    std::uint64_t wire_size = 0;
    for (unsigned j : receiver_idx) {
      wire_size = wire::envelope_overhead(party.state.id.size()) + payload.size();
      transport_.send(party.state.id, aggregators_[j].id, wire::MessageKind::ProtectedUpdate, k,
                      payload);
    }
    if (i == live_party_idx.front()) rec.ciphertext_bytes_per_party = wire_size;
  }
  rec.times.protect_ms = ms_since(protect_start);

  // Aggregation: collect, request keys through compliance, share-decrypt.
  auto aggregate_start = Clock::now();
  std::set<std::string> expected;
  for (unsigned j : actor_idx) expected.insert(aggregators_[j].id);

  std::map<std::string, std::vector<tdsa::ProtectedUpdate>> received;
  for (unsigned j : receiver_idx) {
    const std::string& id = aggregators_[j].id;
    std::vector<wire::Envelope> envelopes = transport_.drain(id);
    if (aggs_after.count(id)) continue;  // received, then failed
    for (const wire::Envelope& env : envelopes) {
      if (env.kind != wire::MessageKind::ProtectedUpdate || env.round_index != k) continue;
      received[id].push_back(serial::decode_protected_update(env.payload));
    }
  }

  std::map<std::string, tdsa::DkRequest> requests;
  for (unsigned j : actor_idx) {
    tdsa::AggregatorState& agg = aggregators_[j];
    try {
      tdsa::DkRequest request = tdsa::prepare_dk_request(agg, received[agg.id], label, *infra_);
      serial::Bytes payload = serial::encode(request);
      rec.dk_bytes_total += wire::envelope_overhead(agg.id.size()) + payload.size();
      transport_.send(agg.id, "infra", wire::MessageKind::DkRequest, k, payload);
    } catch (const Error& err) {
      rec.events.push_back("input-rejected:" + agg.id + ":" + errc_name(err.code()));
    }
  }

  // The compliance service resolves the drained requests; requesters left
  // pending are re-polled once no further submissions can arrive.
  std::vector<tdsa::DkRequest> submitted;
  for (const wire::Envelope& env : transport_.drain("infra")) {
    if (env.kind != wire::MessageKind::DkRequest) continue;
    submitted.push_back(serial::decode_dk_request(env.payload));
  }
  std::set<std::string> submitted_ids;
  for (const tdsa::DkRequest& request : submitted) submitted_ids.insert(request.aggregator_id);

  std::vector<tdsa::DkRequest> pending;
  auto dispatch = [&](const tdsa::DkRequest& request, const std::set<std::string>& who) -> bool {
    tdsa::Decision decision = infra_->compliance_submit(request, who);
    if (decision.status == tdsa::Decision::Status::Pending) return false;
    if (decision.status == tdsa::Decision::Status::Rejected) {
      rec.events.push_back("dk-rejected:" + request.aggregator_id + ":" + decision.reason);
      transport_.send("infra", request.aggregator_id, wire::MessageKind::Abort, k,
                      decision.reason);
      return true;
    }
    tdsa::KeyGrant grant{request.aggregator_id, label, request.fusion,
                         std::move(decision.coordinate_shares)};
    serial::Bytes payload = serial::encode(grant, group);
    rec.dk_bytes_total += wire::envelope_overhead(5) + payload.size();
    transport_.send("infra", request.aggregator_id, wire::MessageKind::DkGrant, k, payload);
    return true;
  };
  for (const tdsa::DkRequest& request : submitted) {
    if (!dispatch(request, expected)) pending.push_back(request);
  }
  for (const tdsa::DkRequest& request : pending) {
    if (!dispatch(request, submitted_ids)) {
      rec.events.push_back("dk-rejected:" + request.aggregator_id + ":quorum-never-formed");
    }
  }

  for (unsigned j : actor_idx) {
    tdsa::AggregatorState& agg = aggregators_[j];
    std::optional<tdsa::KeyGrant> grant;
    for (const wire::Envelope& env : transport_.drain(agg.id)) {
      if (env.kind == wire::MessageKind::DkGrant) grant = serial::decode_key_grant(env.payload);
    }
    if (!grant) continue;
    artifacts_.grants[agg.id] = *grant;
    try {
      tdsa::ModelPartial partial = tdsa::produce_partial(agg, received[agg.id], *grant, *infra_);
      artifacts_.partials[agg.id] = partial;
      serial::Bytes payload = serial::encode(partial, group);
      for (unsigned i : live_party_idx) {
        rec.partial_bytes_total += wire::envelope_overhead(agg.id.size()) + payload.size();
        transport_.send(agg.id, parties_[i].state.id, wire::MessageKind::Partial, k, payload);
      }
    } catch (const Error& err) {
      rec.events.push_back("input-rejected:" + agg.id + ":" + errc_name(err.code()));
    }
  }
  rec.times.aggregate_ms = ms_since(aggregate_start);

  // Recovery: every live party combines whatever partials arrived.
  auto recover_start = Clock::now();
  std::vector<double> recovered;
  bool have_recovered = false;
  bool round_failed = false;
  for (unsigned i : live_party_idx) {
    PartyRuntime& party = parties_[i];
    std::vector<tdsa::ModelPartial> partials;
    for (const wire::Envelope& env : transport_.drain(party.state.id)) {
      if (env.kind != wire::MessageKind::Partial || env.round_index != k) continue;
      partials.push_back(serial::decode_model_partial(env.payload));
    }
    if (round_failed) continue;  // still drain the remaining mailboxes
    try {
      std::vector<double> mine = tdsa::tdsa_recover(party.state, partials, enc_);
      if (!have_recovered) {
        recovered = mine;
        have_recovered = true;
      } else if (mine != recovered) {
        rec.events.push_back("round-failed:recovered-vectors-disagree");
        round_failed = true;
      }
    } catch (const Error& err) {
      if (err.code() == Errc::insufficient_shares) {
        rec.events.push_back("round-failed:insufficient-partials");
      } else {
        rec.events.push_back(std::string("abort:") + errc_name(err.code()) + ":" +
                             party.state.id);
      }
      round_failed = true;
    }
  }
  rec.times.recover_ms = ms_since(recover_start);

  if (!round_failed && have_recovered) {
    rec.completed = true;
    rec.recovered_update = recovered;
    artifacts_.recovered = recovered;
    for (unsigned i : live_party_idx) parties_[i].model.weights = recovered;
    global_model_ = recovered;

    // Plaintext oracle: the same weighted average over the exact vectors
    // the parties submitted this round.
    if (!artifacts_.partials.empty()) {
      const codec::FusionSpec& fusion = artifacts_.partials.begin()->second.fusion;
      rec.plaintext_average.assign(recovered.size(), 0.0);
      for (std::size_t slot = 0; slot < fusion.party_ids.size(); ++slot) {
        for (std::size_t idx = 0; idx < artifacts_.updates.size(); ++idx) {
          if (artifacts_.updates[idx].party_id != fusion.party_ids[slot]) continue;
          for (std::size_t c = 0; c < recovered.size(); ++c) {
            rec.plaintext_average[c] +=
                fusion.weights[slot] * artifacts_.submitted_plaintexts[idx][c];
          }
        }
      }
      double max_dev = 0.0;
      for (std::size_t c = 0; c < recovered.size(); ++c) {
        max_dev = std::max(max_dev, std::abs(recovered[c] - rec.plaintext_average[c]));
      }
      rec.max_deviation = max_dev;
    }

    trainer::ToyModel snapshot{cfg_.trainer.family, recovered};
    rec.test_accuracy = trainer::evaluate_accuracy(snapshot, test_);
  } else {
    rec.completed = false;
    if (!round_failed) rec.events.push_back("round-failed:insufficient-partials");
  }

  double loss_sum = 0.0;
  for (unsigned i : live_party_idx) loss_sum += rec.party_losses[i];
  rec.train_loss_mean = loss_sum / static_cast<double>(live_party_idx.size());

  // Per-round byte deltas against the cumulative edge counters.
  for (const auto& [edge, bytes] : transport_.edge_bytes()) {
    std::uint64_t before = 0;
    auto snap = edge_snapshot_.find(edge);
    if (snap != edge_snapshot_.end()) before = snap->second;
    if (bytes > before) {
      rec.bytes_per_edge.push_back({edge.first, edge.second, bytes - before});
      rec.total_bytes += bytes - before;
    }
  }
  edge_snapshot_ = transport_.edge_bytes();
  return rec;
}

ExperimentResult Simulation::run_experiment() {
  auto start = Clock::now();
  ExperimentResult result;
  for (std::uint64_t k = 1; k <= cfg_.max_rounds_q; ++k) {
    RoundRecord rec = run_round(k);
    if (rec.completed) ++result.rounds_completed;
    result.total_bytes += rec.total_bytes;
    result.rounds.push_back(std::move(rec));
  }
  result.final_model = global_model_;
  trainer::ToyModel final_model{cfg_.trainer.family, global_model_};
  result.final_accuracy = trainer::evaluate_accuracy(final_model, test_);
  result.final_loss = trainer::evaluate_loss(final_model, test_);
  result.total_seconds = ms_since(start) / 1000.0;
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  Simulation sim(cfg);
  return sim.run_experiment();
}

ExperimentResult run_plaintext_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  auto start = Clock::now();

  dataset::Dataset source =
      cfg.dataset_csv ? dataset::load_csv(*cfg.dataset_csv)
                      : dataset::synth_two_class(cfg.trainer.samples, cfg.trainer.features,
                                                 cfg.trainer.data_noise, mix_seed(cfg.seed, 2));
  auto split = dataset::split_train_test(source, cfg.trainer.test_fraction, mix_seed(cfg.seed, 3));
  auto partitions = dataset::partition_data(split.train, cfg.n_parties, cfg.trainer.partition,
                                            cfg.trainer.concentration, mix_seed(cfg.seed, 4));

  std::vector<trainer::ToyModel> models(
      cfg.n_parties, trainer::ToyModel::zeros(cfg.trainer.family, cfg.trainer.features));
  std::vector<double> global(cfg.trainer.features + 1, 0.0);

  ExperimentResult result;
  for (std::uint64_t k = 1; k <= cfg.max_rounds_q; ++k) {
    RoundRecord rec;
    rec.round_index = k;
    rec.party_losses.assign(cfg.n_parties, std::numeric_limits<double>::quiet_NaN());

    std::set<std::string> gone;
    auto it = cfg.dropout_schedule.find(k);
    if (it != cfg.dropout_schedule.end()) {
      for (const DropoutEvent& event : it->second) {
        if (!event.entity_id.empty() && event.entity_id[0] == 'p') gone.insert(event.entity_id);
      }
    }

    std::vector<codec::PartyStat> stats;
    std::vector<unsigned> live;
    for (unsigned i = 0; i < cfg.n_parties; ++i) {
      if (gone.count(party_id(i))) continue;
      live.push_back(i);
      trainer::TrainParams params{cfg.trainer.learning_rate, cfg.local_epochs};
      rec.party_losses[i] = trainer::train_local(models[i], partitions[i], params);
      codec::PartyStat stat;
      stat.id = party_id(i);
      stat.sample_count = partitions[i].size();
      if (cfg.fusion_mode == codec::FusionMode::Personalized) {
        stat.personalized_weight = cfg.personalized_weights.at(party_id(i));
      }
      stats.push_back(stat);
    }
    if (live.empty()) {
      rec.events.push_back("round-failed:quorum");
      result.rounds.push_back(std::move(rec));
      continue;
    }

    codec::FusionSpec fusion = codec::make_fusion_spec(
        cfg.fusion_mode, stats, tdsa::RoundLabel::for_round(k).bytes(), cfg.encoding());
    std::vector<double> average(global.size(), 0.0);
    for (std::size_t slot = 0; slot < live.size(); ++slot) {
      for (std::size_t c = 0; c < average.size(); ++c) {
        average[c] += fusion.weights[slot] * models[live[slot]].weights[c];
      }
    }
    for (unsigned i : live) models[i].weights = average;
    global = average;

    rec.completed = true;
    rec.recovered_update = average;
    rec.plaintext_average = average;
    trainer::ToyModel snapshot{cfg.trainer.family, average};
    rec.test_accuracy = trainer::evaluate_accuracy(snapshot, split.test);
    double loss_sum = 0.0;
    for (unsigned i : live) loss_sum += rec.party_losses[i];
    rec.train_loss_mean = loss_sum / static_cast<double>(live.size());
    ++result.rounds_completed;
    result.rounds.push_back(std::move(rec));
  }

  result.final_model = global;
  trainer::ToyModel final_model{cfg.trainer.family, global};
  result.final_accuracy = trainer::evaluate_accuracy(final_model, split.test);
  result.final_loss = trainer::evaluate_loss(final_model, split.test);
  result.total_seconds = ms_since(start) / 1000.0;
  return result;
}

}  // namespace tapfed::harness
