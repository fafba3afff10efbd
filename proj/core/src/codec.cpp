// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#include "tapfed/codec.hpp"

#include <cmath>
#include <numeric>

#include "tapfed/error.hpp"

namespace tapfed::codec {

namespace {

double pow10(int exp) { return std::pow(10.0, exp); }

std::int64_t scale_round(double v, int digits) {
  double scaled = v * pow10(digits);
  if (!std::isfinite(scaled) || std::abs(scaled) > 9.0e18) {
    fail(Errc::encoding_range, "scaled value exceeds the integer range");
  }
  return std::llround(scaled);
}

}  // namespace

EncodingConfig EncodingConfig::make(int pr, int prw, double value_bound, unsigned n_parties,
                                    double max_weight) {
  EncodingConfig cfg;
  cfg.value_precision_pr = pr;
  cfg.weight_precision_prw = prw;
  cfg.value_bound = value_bound;
  cfg.max_weight = max_weight;
  double bound = static_cast<double>(n_parties) * pow10(pr + prw) * value_bound * max_weight;
  if (!std::isfinite(bound) || bound > 4.0e18) {
    fail(Errc::config_error, "derived dlog bound exceeds the 64-bit search range");
  }
  cfg.dlog_bound_B = static_cast<std::int64_t>(std::ceil(bound));
  cfg.validate(n_parties);
  return cfg;
}

void EncodingConfig::validate(unsigned n_parties) const {
  if (value_precision_pr < 1) fail(Errc::config_error, "pr must be at least 1");
  if (weight_precision_prw < 0) fail(Errc::config_error, "prw must be non-negative");
  if (value_bound <= 0.0) fail(Errc::config_error, "value_bound must be positive");
  double needed = static_cast<double>(n_parties) *
                  pow10(value_precision_pr + weight_precision_prw) * value_bound * max_weight;
  if (static_cast<double>(dlog_bound_B) < needed) {
    fail(Errc::config_error, "dlog_bound_B below n * 10^{pr+prw} * value_bound * max_weight");
  }
}

FusionMode fusion_mode_from_name(std::string_view name) {
  if (name == "iter-avg") return FusionMode::IterAvg;
  if (name == "fedavg") return FusionMode::FedAvg;
  if (name == "personalized") return FusionMode::Personalized;
  fail(Errc::config_error, "unknown fusion mode: " + std::string(name));
}

std::string_view fusion_mode_name(FusionMode mode) {
  switch (mode) {
    case FusionMode::IterAvg: return "iter-avg";
    case FusionMode::FedAvg: return "fedavg";
    case FusionMode::Personalized: return "personalized";
  }
  return "?";
}

bool FusionSpec::same_spec(const FusionSpec& other) const {
  return party_ids == other.party_ids && scaled_weights == other.scaled_weights &&
         weight_scale_prw == other.weight_scale_prw && label == other.label;
}

std::vector<mpz_class> encode_vector(std::span<const double> values, const EncodingConfig& cfg,
                                     const GroupParams& group) {
  std::vector<mpz_class> out;
  out.reserve(values.size());
  for (double v : values) {
    if (!std::isfinite(v) || std::abs(v) > cfg.value_bound) {
      fail(Errc::encoding_range, "coordinate outside [-value_bound, value_bound]");
    }
    std::int64_t m = scale_round(v, cfg.value_precision_pr);
    if (m >= 0) {
      out.push_back(from_i64(m));
    } else {
      out.push_back(group.order_p - from_i64(-m));
    }
  }
  return out;
}

double decode_result(std::int64_t raw, const EncodingConfig& cfg, const FusionSpec& fusion) {
  if (std::llabs(raw) > cfg.dlog_bound_B) {
    fail(Errc::result_out_of_range, "raw aggregate outside the configured dlog bound");
  }
  return static_cast<double>(raw) /
         pow10(cfg.value_precision_pr + fusion.weight_scale_prw);
}

FusionSpec make_fusion_spec(FusionMode mode, const std::vector<PartyStat>& party_stats,
                            std::string_view label, const EncodingConfig& cfg) {
  if (party_stats.empty()) fail(Errc::degenerate_weights, "no active parties");

  FusionSpec spec;
  spec.weight_scale_prw = cfg.weight_precision_prw;
  spec.label.assign(label.data(), label.size());
  spec.party_ids.reserve(party_stats.size());
  spec.weights.reserve(party_stats.size());

  switch (mode) {
    case FusionMode::IterAvg: {
      double w = 1.0 / static_cast<double>(party_stats.size());
      for (const PartyStat& stat : party_stats) {
        spec.party_ids.push_back(stat.id);
        spec.weights.push_back(w);
      }
      break;
    }
    case FusionMode::FedAvg: {
      std::uint64_t total = 0;
      for (const PartyStat& stat : party_stats) total += stat.sample_count;
      if (total == 0) fail(Errc::degenerate_weights, "zero total sample count");
      for (const PartyStat& stat : party_stats) {
        spec.party_ids.push_back(stat.id);
        spec.weights.push_back(static_cast<double>(stat.sample_count) /
                               static_cast<double>(total));
      }
      break;
    }
    case FusionMode::Personalized: {
      for (const PartyStat& stat : party_stats) {
        if (stat.personalized_weight < 0.0 || !std::isfinite(stat.personalized_weight)) {
          fail(Errc::degenerate_weights, "personalized weights must be finite and >= 0");
        }
        spec.party_ids.push_back(stat.id);
        spec.weights.push_back(stat.personalized_weight);
      }
      break;
    }
  }

  spec.scaled_weights.reserve(spec.weights.size());
  for (double w : spec.weights) {
    if (w > cfg.max_weight) fail(Errc::degenerate_weights, "weight exceeds configured max_weight");
    spec.scaled_weights.push_back(scale_round(w, cfg.weight_precision_prw));
  }
  return spec;
}

}  // namespace tapfed::codec
