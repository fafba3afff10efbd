// Copyright (c) the tapfed project contributors.
// Licensed under the Apache 2.0 License.

#include "tapfed/trainer.hpp"

#include <cmath>
#include <limits>

#include "tapfed/error.hpp"

namespace tapfed::trainer {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double predict_raw(const ToyModel& model, const std::vector<double>& row) {
  double z = model.weights.back();
  for (std::size_t k = 0; k < row.size(); ++k) z += model.weights[k] * row[k];
  return z;
}

}  // namespace

ModelFamily family_from_name(const std::string& name) {
  if (name == "linear-regression") return ModelFamily::LinearRegression;
  if (name == "logistic-regression") return ModelFamily::LogisticRegression;
  fail(Errc::config_error, "unknown model family: " + name);
}

ToyModel ToyModel::zeros(ModelFamily family, std::size_t features) {
  ToyModel model;
  model.family = family;
  model.weights.assign(features + 1, 0.0);
  return model;
}

double train_local(ToyModel& model, const dataset::Dataset& data, const TrainParams& params) {
  if (data.size() == 0) fail(Errc::config_error, "cannot train on an empty partition");
  if (model.weights.size() != data.feature_count() + 1) {
    fail(Errc::config_error, "model width disagrees with the dataset");
  }

  const double m = static_cast<double>(data.size());
  std::vector<double> grad(model.weights.size());
  for (unsigned epoch = 0; epoch < params.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      double z = predict_raw(model, data.features[i]);
      double prediction = model.family == ModelFamily::LogisticRegression ? sigmoid(z) : z;
      double residual = prediction - data.targets[i];
      for (std::size_t k = 0; k < data.features[i].size(); ++k) {
        grad[k] += residual * data.features[i][k];
      }
      grad.back() += residual;
    }
    for (std::size_t k = 0; k < model.weights.size(); ++k) {
      model.weights[k] -= params.learning_rate * grad[k] / m;
    }
  }
  return evaluate_loss(model, data);
}

double evaluate_loss(const ToyModel& model, const dataset::Dataset& data) {
  if (data.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  double loss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double z = predict_raw(model, data.features[i]);
    if (model.family == ModelFamily::LogisticRegression) {
      double p = sigmoid(z);
      const double eps = 1e-12;
      loss += -(data.targets[i] * std::log(p + eps) +
                (1.0 - data.targets[i]) * std::log(1.0 - p + eps));
    } else {
      double r = z - data.targets[i];
      loss += 0.5 * r * r;
    }
  }
  return loss / static_cast<double>(data.size());
}

double evaluate_accuracy(const ToyModel& model, const dataset::Dataset& data) {
  if (model.family != ModelFamily::LogisticRegression || data.size() == 0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double p = sigmoid(predict_raw(model, data.features[i]));
    int predicted = p >= 0.5 ? 1 : 0;
    if (predicted == static_cast<int>(data.targets[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace tapfed::trainer
