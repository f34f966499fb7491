#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "elicit/rating_matrix.hpp"

namespace elicit::mf {

struct MFHyperparams {
  int factors = 20;
  double learning_rate = 0.005;
  double l2_reg = 0.02;
  int epochs = 50;
  double init_sd = 0.1;
  std::uint64_t seed = 42;
};

void validate(const MFHyperparams& hp);

// Biased matrix factorization:
//   r_hat(u, i) = global_mean + user_bias[u] + item_bias[i] + <p_u, q_i>
// Parameters are stored for every catalog id; only ids seen in training carry
// trained values (the `*_seen` masks). Factor matrices are row-major,
// `factors` columns.
struct MFModel {
  int factors = 0;
  Scale scale = Scale::Raw_0_100;
  double global_mean = 0.0;
  std::vector<double> user_bias;
  std::vector<double> item_bias;
  std::vector<double> user_factors;
  std::vector<double> item_factors;
  std::vector<char> user_seen;
  std::vector<char> item_seen;

  // Unclamped model output; bias and dot-product terms only where known.
  double raw_predict(UserId u, ItemId i) const;
  // raw_predict() clamped to the training scale.
  double predict(UserId u, ItemId i) const;

  const double* p(UserId u) const { return user_factors.data() + static_cast<std::size_t>(u) * factors; }
  const double* q(ItemId i) const { return item_factors.data() + static_cast<std::size_t>(i) * factors; }

  friend bool operator==(const MFModel&, const MFModel&) = default;
};

// Called after each epoch with the 1-based epoch number.
using EpochCallback = std::function<void(int epoch, const MFModel&)>;

// SGD over the seeded-shuffled ratings of `known`. Each step moves every
// touched parameter by learning_rate/2 times the negative gradient of that
// rating's term of objective(). Throws ArgumentError on an empty matrix.
MFModel fit(const RatingMatrix& known, const MFHyperparams& hp, const EpochCallback& on_epoch = {});

// sum over (u,i,r) in `ratings` of
//   (r - raw_predict(u,i))^2 + l2_reg * (b_u^2 + b_i^2 + |p_u|^2 + |q_i|^2)
// with global_mean held fixed.
double objective(const MFModel& m, const RatingMatrix& ratings, double l2_reg);

struct MFGradient {
  std::vector<double> user_bias;
  std::vector<double> item_bias;
  std::vector<double> user_factors;
  std::vector<double> item_factors;
};

// Analytic gradient of objective() with respect to every model parameter.
MFGradient objective_gradient(const MFModel& m, const RatingMatrix& ratings, double l2_reg);

// Throws ArgumentError on an empty test set.
double evaluate_rmse(const MFModel& m, const RatingMatrix& test);

// Plain-text parameter dump, one entity per line.
void write_model(std::ostream& out, const MFModel& m);

}  // namespace elicit::mf
