// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#include "tapfed/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "tapfed/error.hpp"

namespace tapfed::dataset {

Dataset synth_two_class(std::size_t samples, std::size_t features, double noise,
                        std::uint64_t seed) {
  if (features == 0 || samples < 2) fail(Errc::config_error, "degenerate synthetic dataset shape");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, noise);
  std::uniform_real_distribution<double> direction(-1.0, 1.0);

  // Class centers at +-c along a random unit direction.
  std::vector<double> axis(features);
  double norm = 0.0;
  for (double& v : axis) {
    v = direction(rng);
    norm += v * v;
  }
  norm = std::sqrt(std::max(norm, 1e-12));
  for (double& v : axis) v /= norm;

  Dataset out;
  out.features.reserve(samples);
  out.targets.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    int label = static_cast<int>(i % 2);
    double sign = label == 0 ? -1.0 : 1.0;
    std::vector<double> row(features);
    for (std::size_t k = 0; k < features; ++k) {
      row[k] = sign * axis[k] + jitter(rng);
    }
    out.features.push_back(std::move(row));
    out.targets.push_back(static_cast<double>(label));
  }
  return out;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::config_error, "cannot open dataset: " + path);
  Dataset out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header
      }
      fail(Errc::parse_error, "non-numeric dataset row: " + line);
    }
    first = false;
    if (row.size() < 2) fail(Errc::parse_error, "dataset rows need features plus a target");
    double target = row.back();
    row.pop_back();
    if (!out.features.empty() && row.size() != out.feature_count()) {
      fail(Errc::parse_error, "ragged dataset rows");
    }
    out.features.push_back(std::move(row));
    out.targets.push_back(target);
  }
  if (out.size() == 0) fail(Errc::config_error, "empty dataset: " + path);
  return out;
}

TrainTestSplit split_train_test(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) {
    fail(Errc::config_error, "test_fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::size_t test_count = static_cast<std::size_t>(std::llround(test_fraction * data.size()));
  TrainTestSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    Dataset& bucket = i < test_count ? split.test : split.train;
    bucket.features.push_back(data.features[order[i]]);
    bucket.targets.push_back(data.targets[order[i]]);
  }
  if (split.train.size() == 0) fail(Errc::config_error, "train split is empty");
  return split;
}

PartitionMode partition_mode_from_name(const std::string& name) {
  if (name == "iid") return PartitionMode::Iid;
  if (name == "label-skew") return PartitionMode::LabelSkew;
  fail(Errc::config_error, "unknown partition mode: " + name);
}

std::vector<Dataset> partition_data(const Dataset& data, unsigned n_parties, PartitionMode mode,
                                    double concentration, std::uint64_t seed) {
  if (n_parties == 0) fail(Errc::config_error, "need at least one party");
  if (data.size() < n_parties) fail(Errc::config_error, "fewer samples than parties");

  std::mt19937_64 rng(seed);
  std::vector<Dataset> parts(n_parties);

  if (mode == PartitionMode::Iid) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < order.size(); ++i) {
      Dataset& part = parts[i % n_parties];
      part.features.push_back(data.features[order[i]]);
      part.targets.push_back(data.targets[order[i]]);
    }
    return parts;
  }

  if (concentration <= 0.0) fail(Errc::config_error, "concentration must be positive");

  // Group rows by class, then split each class by a Dirichlet draw.
  std::map<double, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.targets[i]].push_back(i);

  std::gamma_distribution<double> gamma(concentration, 1.0);
  for (auto& [label, rows] : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    std::vector<double> proportions(n_parties);
    double total = 0.0;
    for (double& v : proportions) {
      v = std::max(gamma(rng), 1e-12);
      total += v;
    }
    std::size_t assigned = 0;
    for (unsigned party = 0; party < n_parties; ++party) {
      std::size_t count = party + 1 == n_parties
                              ? rows.size() - assigned
                              : static_cast<std::size_t>(
                                    std::floor(proportions[party] / total * rows.size()));
      count = std::min(count, rows.size() - assigned);
      for (std::size_t k = 0; k < count; ++k) {
        std::size_t row = rows[assigned + k];
        parts[party].features.push_back(data.features[row]);
        parts[party].targets.push_back(data.targets[row]);
      }
      assigned += count;
    }
  }
  return parts;
}

}  // namespace tapfed::dataset
