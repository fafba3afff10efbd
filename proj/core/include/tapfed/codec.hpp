// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tapfed/group.hpp"

namespace tapfed::codec {

// Bridges floating-point model updates and fusion weights into the integer
// message/key spaces. Values scale by 10^pr, weights by 10^prw, and one
// division by 10^{pr+prw} removes both after decryption.
struct EncodingConfig {
  int value_precision_pr = 4;
  int weight_precision_prw = 4;
  double value_bound = 8.0;
  double max_weight = 1.0;
  std::int64_t dlog_bound_B = 0;

  // Pins dlog_bound_B to n * 10^{pr+prw} * value_bound * max_weight, so
  // every honest aggregate lands inside the dlog search range and an
  // out-of-bound result stays a meaningful tamper/replay signal.
  static EncodingConfig make(int pr, int prw, double value_bound, unsigned n_parties,
                             double max_weight = 1.0);

  void validate(unsigned n_parties) const;
};

enum class FusionMode { IterAvg, FedAvg, Personalized };

FusionMode fusion_mode_from_name(std::string_view name);
std::string_view fusion_mode_name(FusionMode mode);

// Per-party inputs to fusion weight construction; only active (non-dropped)
// parties appear.
struct PartyStat {
  std::string id;
  std::uint64_t sample_count = 0;
  double personalized_weight = 0.0;
};

// The unit of DK compliance checking: one weight per active party, the
// round label, and the weight scale. Equality is exact (integer scaled
// weights), never floating-point.
struct FusionSpec {
  std::vector<std::string> party_ids;       // active parties, in order
  std::vector<double> weights;              // each >= 0
  std::vector<std::int64_t> scaled_weights; // round(w * 10^prw)
  int weight_scale_prw = 0;
  std::string label;

  bool same_spec(const FusionSpec& other) const;
};

// Entry-wise round(v * 10^pr); negatives map to p - |m|.
std::vector<mpz_class> encode_vector(std::span<const double> values, const EncodingConfig& cfg,
                                     const GroupParams& group);

// raw / 10^{pr + prw}.
double decode_result(std::int64_t raw, const EncodingConfig& cfg, const FusionSpec& fusion);

FusionSpec make_fusion_spec(FusionMode mode, const std::vector<PartyStat>& party_stats,
                            std::string_view label, const EncodingConfig& cfg);

}  // namespace tapfed::codec
