// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tapfed::dataset {

// Row-major feature matrix with integer class labels (binary for the toy
// trainers: 0/1). Linear-regression targets reuse the label field as a
// real value via `targets`.
struct Dataset {
  std::vector<std::vector<double>> features;
  std::vector<double> targets;

  std::size_t size() const { return features.size(); }
  std::size_t feature_count() const { return features.empty() ? 0 : features[0].size(); }
};

// Two Gaussian blobs, one per class, linearly separable up to `noise`.
Dataset synth_two_class(std::size_t samples, std::size_t features, double noise,
                        std::uint64_t seed);

// CSV rows of feature columns with the target as the last column. A header
// line is skipped when the first field does not parse as a number.
Dataset load_csv(const std::string& path);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

TrainTestSplit split_train_test(const Dataset& data, double test_fraction, std::uint64_t seed);

enum class PartitionMode { Iid, LabelSkew };

PartitionMode partition_mode_from_name(const std::string& name);

// Disjoint per-party partitions. Iid deals shuffled rows round-robin;
// LabelSkew draws per-class party proportions from a Dirichlet with the
// given concentration (large concentration converges to the iid split).
std::vector<Dataset> partition_data(const Dataset& data, unsigned n_parties, PartitionMode mode,
                                    double concentration, std::uint64_t seed);

}  // namespace tapfed::dataset
