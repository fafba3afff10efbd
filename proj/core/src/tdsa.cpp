// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#include "tapfed/tdsa.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tapfed/error.hpp"

namespace tapfed::tdsa {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    out.push_back(static_cast<char>((v >> shift) & 0xff));
  }
}

std::vector<mpz_class> scaled_weight_vector(const codec::FusionSpec& fusion,
                                            const GroupParams& group) {
  std::vector<mpz_class> y;
  y.reserve(fusion.scaled_weights.size());
  for (std::int64_t w : fusion.scaled_weights) y.push_back(reduce_scalar(from_i64(w), group));
  return y;
}

}  // namespace

std::string RoundLabel::bytes() const {
  std::string out;
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<char>((round_index >> shift) & 0xff));
  }
  if (scope) {
    out.push_back(1);
    put_u32(out, static_cast<std::uint32_t>(scope->size()));
    out += *scope;
  } else {
    out.push_back(0);
  }
  return out;
}

RoundLabel RoundLabel::for_round(std::uint64_t k) {
  RoundLabel label;
  label.round_index = k;
  return label;
}

RoundLabel RoundLabel::personalized(std::uint64_t k, std::string scope) {
  RoundLabel label;
  label.round_index = k;
  label.scope = std::move(scope);
  return label;
}

CryptoInfrastructure::CryptoInfrastructure(const GroupParams& group,
                                           std::vector<std::string> party_ids,
                                           std::vector<std::string> aggregator_ids,
                                           unsigned model_dim, unsigned threshold_t,
                                           unsigned trust_threshold, std::uint64_t seed)
    : party_ids_(std::move(party_ids)),
      aggregator_ids_(std::move(aggregator_ids)),
      model_dim_(model_dim),
      rng_(seed) {
  if (party_ids_.empty() || aggregator_ids_.empty() || model_dim_ == 0) {
    fail(Errc::config_error, "need parties, aggregators and a positive model dimension");
  }
  const unsigned n = static_cast<unsigned>(party_ids_.size());
  const unsigned s = static_cast<unsigned>(aggregator_ids_.size());
  std::set<std::string> unique(party_ids_.begin(), party_ids_.end());
  for (const std::string& id : aggregator_ids_) {
    if (!unique.insert(id).second) fail(Errc::config_error, "duplicate entity id: " + id);
  }
  if (unique.size() != n + s) fail(Errc::config_error, "duplicate entity id");
  if (trust_threshold > s) {
    fail(Errc::config_error, "trust threshold exceeds the aggregator count");
  }
  auto result = tmcfe::setup_with_group(group, std::vector<unsigned>(n, model_dim_), threshold_t,
                                        s, n, rng_);
  pp_ = std::move(result.pp);
  msk_ = std::move(result.msk);
  compliance_.trust_threshold = trust_threshold == 0 ? threshold_t : trust_threshold;
}

CryptoInfrastructure::CryptoInfrastructure(unsigned lambda_bits,
                                           std::vector<std::string> party_ids,
                                           std::vector<std::string> aggregator_ids,
                                           unsigned model_dim, unsigned threshold_t,
                                           unsigned trust_threshold, std::uint64_t seed)
    : CryptoInfrastructure(gen_group(lambda_bits, mix_seed(seed, 0x67726f7570ull)),
                           std::move(party_ids), std::move(aggregator_ids), model_dim,
                           threshold_t, trust_threshold, seed) {}

std::set<std::string> CryptoInfrastructure::aggregator_id_set() const {
  return {aggregator_ids_.begin(), aggregator_ids_.end()};
}

unsigned CryptoInfrastructure::party_client_index(const std::string& party_id) const {
  for (std::size_t i = 0; i < party_ids_.size(); ++i) {
    if (party_ids_[i] == party_id) return static_cast<unsigned>(i + 1);
  }
  fail(Errc::index_out_of_range, "unknown party id: " + party_id);
}

unsigned CryptoInfrastructure::aggregator_share_index(const std::string& aggregator_id) const {
  for (std::size_t j = 0; j < aggregator_ids_.size(); ++j) {
    if (aggregator_ids_[j] == aggregator_id) return static_cast<unsigned>(j + 1);
  }
  fail(Errc::index_out_of_range, "unknown aggregator id: " + aggregator_id);
}

tmcfe::PartySecretKey CryptoInfrastructure::party_key(const std::string& party_id) const {
  return tmcfe::sk_distribute(pp_, msk_, party_client_index(party_id));
}

tmcfe::PublicParams CryptoInfrastructure::view_params(unsigned active_count) const {
  tmcfe::PublicParams view;
  view.group = pp_.group;
  view.threshold_t = pp_.threshold_t;
  view.share_count_s = pp_.share_count_s;
  view.client_count_n = active_count;
  view.vector_lengths.assign(active_count, 1u);
  view.hash_id = pp_.hash_id;
  return view;
}

std::vector<std::vector<tmcfe::FunctionalKeyShare>> CryptoInfrastructure::generate_label_shares(
    const codec::FusionSpec& fusion, const std::string& label_bytes) {
  const unsigned active = static_cast<unsigned>(fusion.party_ids.size());
  const tmcfe::PublicParams view = view_params(active);
  const std::vector<mpz_class> y = scaled_weight_vector(fusion, pp_.group);

  // Per-coordinate view of the master secret: column k of W and U,
  // restricted to the active parties. Only W and U rows feed key shares.
  std::vector<std::vector<tmcfe::FunctionalKeyShare>> shares;
  shares.reserve(model_dim_);
  tmcfe::MasterSecretKey column;
  column.W.assign(active, std::vector<mpz_class>(1));
  column.U.assign(active, std::vector<mpz_class>(1));
  column.alpha_sum_A = msk_.alpha_sum_A;
  for (unsigned k = 0; k < model_dim_; ++k) {
    for (unsigned i = 0; i < active; ++i) {
      const unsigned master_index = party_client_index(fusion.party_ids[i]) - 1;
      column.W[i][0] = msk_.W[master_index][k];
      column.U[i][0] = msk_.U[master_index][k];
    }
    shares.push_back(tmcfe::dk_generate(view, column, y, label_bytes, rng_));
  }
  return shares;
}

Decision CryptoInfrastructure::compliance_submit(const DkRequest& request,
                                                 const std::set<std::string>& all_expected) {
  std::lock_guard<std::mutex> lock(mutex_);

  const std::string label_bytes = request.label.bytes();
  auto reject = [](std::string reason) {
    return Decision{Decision::Status::Rejected, std::move(reason), {}};
  };

  // Well-formedness before anything touches the ledger.
  if (request.fusion.label != label_bytes) return reject("malformed: fusion label mismatch");
  if (request.fusion.party_ids.empty()) return reject("malformed: empty participant set");
  if (request.fusion.party_ids.size() != request.fusion.scaled_weights.size()) {
    return reject("malformed: weight arity");
  }
  std::set<std::string> seen;
  for (const std::string& id : request.fusion.party_ids) {
    if (std::find(party_ids_.begin(), party_ids_.end(), id) == party_ids_.end()) {
      return reject("malformed: unknown party " + id);
    }
    if (!seen.insert(id).second) return reject("malformed: duplicate party " + id);
  }
  unsigned requester_index = 0;
  try {
    requester_index = aggregator_share_index(request.aggregator_id);
  } catch (const Error&) {
    return reject("malformed: unknown aggregator " + request.aggregator_id);
  }

  auto grant_from_cache = [&](const std::string& lbl) {
    Decision decision;
    decision.status = Decision::Status::Granted;
    decision.coordinate_shares.reserve(model_dim_);
    const auto& cached = share_cache_.at(lbl);
    for (unsigned k = 0; k < model_dim_; ++k) {
      decision.coordinate_shares.push_back(cached[k][requester_index - 1]);
    }
    return decision;
  };

  auto issued_it = compliance_.issued.find(label_bytes);
  if (issued_it != compliance_.issued.end()) {
    if (request.fusion.same_spec(issued_it->second)) return grant_from_cache(label_bytes);
    return reject("one-key-per-label: a different spec was already issued");
  }

  auto& queue = compliance_.pending[label_bytes];
  bool queued = false;
  for (const DkRequest& earlier : queue) {
    if (earlier.aggregator_id != request.aggregator_id) continue;
    if (!earlier.fusion.same_spec(request.fusion)) {
      return reject("conflicting resubmission for the same label");
    }
    queued = true;
  }
  if (!queued) queue.push_back(request);

  unsigned matching = 0;
  std::set<std::string> submitted;
  for (const DkRequest& earlier : queue) {
    submitted.insert(earlier.aggregator_id);
    if (earlier.fusion.same_spec(request.fusion)) ++matching;
  }

  if (matching >= compliance_.trust_threshold) {
    share_cache_[label_bytes] = generate_label_shares(request.fusion, label_bytes);
    compliance_.issued[label_bytes] = request.fusion;
    compliance_.pending.erase(label_bytes);
    return grant_from_cache(label_bytes);
  }

  unsigned outstanding = 0;
  for (const std::string& id : all_expected) {
    if (!submitted.count(id)) ++outstanding;
  }
  if (matching + outstanding < compliance_.trust_threshold) {
    return reject("trust threshold unreachable for this spec");
  }
  return Decision{Decision::Status::Pending, "awaiting matching requests", {}};
}

ProtectedUpdate tdsa_protect(PartyState& party, std::span<const double> model_update,
                             const RoundLabel& label, const std::optional<DpConfig>& dp,
                             std::optional<std::uint64_t> seed) {
  const unsigned eta_i = party.sk.pp.vector_lengths[party.sk.client_index - 1];
  if (model_update.size() != eta_i) {
    fail(Errc::arity_mismatch, "model update length must equal the registered dimension");
  }
  const std::string label_bytes = label.bytes();
  if (party.used_labels.count(label_bytes)) {
    fail(Errc::label_reuse, "party already encrypted under this label");
  }

  std::vector<double> plaintext(model_update.begin(), model_update.end());
  bool noised = false;
  if (dp && dp->scale > 0.0) {
    // Full-scale noise divided by n, added before encoding and encryption.
    std::mt19937_64 noise_rng(seed ? mix_seed(*seed, 0x6470ull)
                                   : std::random_device{}());
    const double n = static_cast<double>(party.sk.pp.client_count_n);
    if (dp->mechanism == DpConfig::Mechanism::Gaussian) {
      std::normal_distribution<double> dist(0.0, dp->scale);
      for (double& v : plaintext) v += dist(noise_rng) / n;
    } else {
      std::uniform_real_distribution<double> unit(-0.5, 0.5);
      for (double& v : plaintext) {
        double u = unit(noise_rng);
        double lap = -dp->scale * std::copysign(1.0, u) * std::log(1.0 - 2.0 * std::abs(u));
        v += lap / n;
      }
    }
    noised = true;
  }

  std::vector<mpz_class> encoded = codec::encode_vector(plaintext, party.enc, party.sk.pp.group);

  ProtectedUpdate update;
  update.party_id = party.id;
  update.label = label;
  update.ciphertext = tmcfe::encrypt(party.sk, encoded, label_bytes,
                                     seed ? std::optional<std::uint64_t>(mix_seed(*seed, 0x656eull))
                                          : std::nullopt);
  update.sample_count = party.sample_count;
  update.dp_applied = noised;
  party.used_labels.insert(label_bytes);
  return update;
}

namespace {

std::vector<const ProtectedUpdate*> order_by_client(const std::vector<ProtectedUpdate>& updates,
                                                    const RoundLabel& label,
                                                    const CryptoInfrastructure& infra) {
  if (updates.empty()) fail(Errc::incomplete_input, "no protected updates received");
  std::vector<const ProtectedUpdate*> ordered;
  ordered.reserve(updates.size());
  for (const ProtectedUpdate& update : updates) {
    if (!(update.label == label)) {
      fail(Errc::label_mismatch, "update from a different round mixed into the batch");
    }
    ordered.push_back(&update);
  }
  std::sort(ordered.begin(), ordered.end(), [&](const auto* a, const auto* b) {
    return infra.party_client_index(a->party_id) < infra.party_client_index(b->party_id);
  });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i - 1]->party_id == ordered[i]->party_id) {
      fail(Errc::incomplete_input, "duplicate update from party " + ordered[i]->party_id);
    }
  }
  return ordered;
}

}  // namespace

DkRequest prepare_dk_request(const AggregatorState& aggregator,
                             const std::vector<ProtectedUpdate>& updates, const RoundLabel& label,
                             const CryptoInfrastructure& infra) {
  // Order received updates by master client index so every honest
  // aggregator derives the identical FusionSpec.
  auto ordered = order_by_client(updates, label, infra);

  std::vector<codec::PartyStat> stats;
  stats.reserve(ordered.size());
  for (const auto* update : ordered) {
    codec::PartyStat stat;
    stat.id = update->party_id;
    stat.sample_count = update->sample_count;
    if (aggregator.mode == codec::FusionMode::Personalized) {
      auto it = aggregator.personalized_weights.find(update->party_id);
      if (it == aggregator.personalized_weights.end()) {
        fail(Errc::degenerate_weights, "no personalized weight for " + update->party_id);
      }
      stat.personalized_weight = it->second;
    }
    stats.push_back(std::move(stat));
  }
  codec::FusionSpec fusion =
      codec::make_fusion_spec(aggregator.mode, stats, label.bytes(), aggregator.enc);
  return DkRequest{aggregator.id, std::move(fusion), label};
}

ModelPartial produce_partial(const AggregatorState& aggregator,
                             const std::vector<ProtectedUpdate>& updates, const KeyGrant& grant,
                             const CryptoInfrastructure& infra) {
  auto ordered = order_by_client(updates, grant.label, infra);
  const codec::FusionSpec& fusion = grant.fusion;
  if (fusion.party_ids.size() != ordered.size()) {
    fail(Errc::key_mismatch, "grant covers a different participant set");
  }
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (ordered[i]->party_id != fusion.party_ids[i]) {
      fail(Errc::key_mismatch, "grant participant order disagrees with the updates");
    }
  }

  const unsigned active = static_cast<unsigned>(fusion.party_ids.size());
  const unsigned dim = infra.model_dim();
  if (grant.coordinate_shares.size() != dim) {
    fail(Errc::key_mismatch, "grant coordinate count disagrees with the model dimension");
  }
  const tmcfe::PublicParams view = infra.view_params(active);
  const std::vector<mpz_class> y = scaled_weight_vector(fusion, view.group);

  ModelPartial partial;
  partial.aggregator_id = aggregator.id;
  partial.share_index = aggregator.share_index;
  partial.label = grant.label;
  partial.fusion = fusion;
  partial.coords.reserve(dim);

  std::vector<tmcfe::Ciphertext> slice(active);
  for (unsigned k = 0; k < dim; ++k) {
    for (unsigned i = 0; i < active; ++i) {
      const tmcfe::Ciphertext& ct = ordered[i]->ciphertext;
      if (ct.ct0.size() != dim) fail(Errc::incomplete_input, "ciphertext width mismatch");
      slice[i].client_index = i + 1;
      slice[i].label = ct.label;
      slice[i].ct0.assign(1, ct.ct0[k]);
      slice[i].ct1 = ct.ct1;
    }
    partial.coords.push_back(tmcfe::share_decrypt(view, slice, y, grant.coordinate_shares[k]));
  }
  return partial;
}

AggregateOutcome tdsa_aggregate(const AggregatorState& aggregator,
                                const std::vector<ProtectedUpdate>& updates,
                                const RoundLabel& label, CryptoInfrastructure& infra,
                                const std::set<std::string>& expected_aggregators) {
  DkRequest request = prepare_dk_request(aggregator, updates, label, infra);
  Decision decision = infra.compliance_submit(request, expected_aggregators);
  if (decision.status == Decision::Status::Pending) {
    return {AggregateOutcome::Status::Pending, std::nullopt, decision.reason};
  }
  if (decision.status == Decision::Status::Rejected) {
    return {AggregateOutcome::Status::Denied, std::nullopt, decision.reason};
  }
  KeyGrant grant{aggregator.id, label, request.fusion, std::move(decision.coordinate_shares)};
  return {AggregateOutcome::Status::Produced,
          produce_partial(aggregator, updates, grant, infra), ""};
}

std::vector<double> tdsa_recover(const PartyState& party,
                                 const std::vector<ModelPartial>& partials,
                                 const codec::EncodingConfig& enc) {
  if (partials.size() < party.sk.pp.threshold_t) {
    fail(Errc::insufficient_shares, "fewer than t model partials");
  }
  const ModelPartial& head = partials[0];
  for (const ModelPartial& partial : partials) {
    if (!(partial.label == head.label)) {
      fail(Errc::label_mismatch, "partials from different labels");
    }
    if (!partial.fusion.same_spec(head.fusion)) {
      fail(Errc::key_mismatch, "partials built from different fusion specs");
    }
    if (partial.coords.size() != head.coords.size()) {
      fail(Errc::incomplete_input, "partials disagree on model dimension");
    }
  }

  const unsigned active = static_cast<unsigned>(head.fusion.party_ids.size());
  tmcfe::PublicParams view;
  view.group = party.sk.pp.group;
  view.threshold_t = party.sk.pp.threshold_t;
  view.share_count_s = party.sk.pp.share_count_s;
  view.client_count_n = active;
  view.vector_lengths.assign(active, 1u);
  view.hash_id = party.sk.pp.hash_id;

  const std::vector<mpz_class> y = scaled_weight_vector(head.fusion, view.group);
  const BsgsTable table(view.group.generator_g, enc.dlog_bound_B, view.group);

  std::vector<double> recovered(head.coords.size());
  std::vector<tmcfe::PartialDecryption> coord_partials;
  coord_partials.reserve(partials.size());
  for (std::size_t k = 0; k < head.coords.size(); ++k) {
    coord_partials.clear();
    for (const ModelPartial& partial : partials) coord_partials.push_back(partial.coords[k]);
    std::int64_t raw = tmcfe::combine_decrypt(view, coord_partials, y, table);
    recovered[k] = codec::decode_result(raw, enc, head.fusion);
  }
  return recovered;
}

}  // namespace tapfed::tdsa
