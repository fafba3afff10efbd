// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#pragma once

#include <string>
#include <vector>

#include "tapfed/dataset.hpp"

namespace tapfed::trainer {

enum class ModelFamily { LinearRegression, LogisticRegression };

ModelFamily family_from_name(const std::string& name);

// Weights plus trailing bias; full-batch gradient descent keeps local
// training deterministic so the secure and plaintext runs differ only by
// aggregation quantization.
struct ToyModel {
  ModelFamily family = ModelFamily::LogisticRegression;
  std::vector<double> weights;  // [w_1..w_d, bias]

  static ToyModel zeros(ModelFamily family, std::size_t features);
};

struct TrainParams {
  double learning_rate = 0.5;
  unsigned epochs = 1;
};

// Runs `epochs` full-batch gradient steps in place; returns the final
// training loss.
double train_local(ToyModel& model, const dataset::Dataset& data, const TrainParams& params);

double evaluate_loss(const ToyModel& model, const dataset::Dataset& data);

// Classification accuracy at the 0.5 threshold; NaN for regression models.
double evaluate_accuracy(const ToyModel& model, const dataset::Dataset& data);

}  // namespace tapfed::trainer
