#include "elicit/mf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "elicit/errors.hpp"

namespace elicit::mf {

void validate(const MFHyperparams& hp) {
  if (hp.factors < 1) throw ArgumentError("mf.factors must be >= 1");
  if (hp.epochs < 1) throw ArgumentError("mf.epochs must be >= 1");
  if (!(hp.learning_rate > 0.0)) throw ArgumentError("mf.learning_rate must be > 0");
  if (!(hp.l2_reg >= 0.0)) throw ArgumentError("mf.l2_reg must be >= 0");
  if (!(hp.init_sd >= 0.0)) throw ArgumentError("mf.init_sd must be >= 0");
}

double MFModel::raw_predict(UserId u, ItemId i) const {
  const bool has_u = u >= 0 && static_cast<std::size_t>(u) < user_seen.size() && user_seen[u];
  const bool has_i = i >= 0 && static_cast<std::size_t>(i) < item_seen.size() && item_seen[i];
  double r = global_mean;
  if (has_u) r += user_bias[u];
  if (has_i) r += item_bias[i];
  if (has_u && has_i) {
    const double* pu = p(u);
    const double* qi = q(i);
    for (int k = 0; k < factors; ++k) r += pu[k] * qi[k];
  }
  return r;
}

double MFModel::predict(UserId u, ItemId i) const {
  const auto range = scale_range(scale);
  return std::clamp(raw_predict(u, i), range.lo, range.hi);
}

MFModel fit(const RatingMatrix& known, const MFHyperparams& hp, const EpochCallback& on_epoch) {
  validate(hp);
  if (known.empty()) throw ArgumentError("cannot fit a recommender on an empty rating set");

  const auto& cat = known.catalog();
  const int f = hp.factors;
  MFModel m;
  m.factors = f;
  m.scale = known.scale();
  m.user_bias.assign(cat.n_users(), 0.0);
  m.item_bias.assign(cat.n_items(), 0.0);
  m.user_factors.assign(cat.n_users() * f, 0.0);
  m.item_factors.assign(cat.n_items() * f, 0.0);
  m.user_seen.assign(cat.n_users(), 0);
  m.item_seen.assign(cat.n_items(), 0);

  std::vector<Rating> data;
  data.reserve(known.size());
  double sum = 0.0;
  for (const auto& [key, v] : known) {
    data.push_back({key.first, key.second, v});
    sum += v;
    m.user_seen[key.first] = 1;
    m.item_seen[key.second] = 1;
  }
  m.global_mean = sum / static_cast<double>(data.size());

  std::mt19937_64 rng(hp.seed);
  std::normal_distribution<double> init(0.0, 1.0);
  for (std::size_t u = 0; u < cat.n_users(); ++u)
    if (m.user_seen[u])
      for (int k = 0; k < f; ++k) m.user_factors[u * f + k] = hp.init_sd * init(rng);
  for (std::size_t i = 0; i < cat.n_items(); ++i)
    if (m.item_seen[i])
      for (int k = 0; k < f; ++k) m.item_factors[i * f + k] = hp.init_sd * init(rng);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const double lr = hp.learning_rate;
  const double reg = hp.l2_reg;
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      const Rating& r = data[idx];
      double* pu = m.user_factors.data() + static_cast<std::size_t>(r.user) * f;
      double* qi = m.item_factors.data() + static_cast<std::size_t>(r.item) * f;
      double& bu = m.user_bias[r.user];
      double& bi = m.item_bias[r.item];
      double pred = m.global_mean + bu + bi;
      for (int k = 0; k < f; ++k) pred += pu[k] * qi[k];
      const double err = r.value - pred;
      bu += lr * (err - reg * bu);
      bi += lr * (err - reg * bi);
      for (int k = 0; k < f; ++k) {
        const double puk = pu[k];
        pu[k] += lr * (err * qi[k] - reg * puk);
        qi[k] += lr * (err * puk - reg * qi[k]);
      }
    }
    if (on_epoch) on_epoch(epoch, m);
  }
  return m;
}

double objective(const MFModel& m, const RatingMatrix& ratings, double l2_reg) {
  double total = 0.0;
  const int f = m.factors;
  for (const auto& [key, v] : ratings) {
    const auto [u, i] = key;
    const double err = v - m.raw_predict(u, i);
    double norm = m.user_bias[u] * m.user_bias[u] + m.item_bias[i] * m.item_bias[i];
    for (int k = 0; k < f; ++k) norm += m.p(u)[k] * m.p(u)[k] + m.q(i)[k] * m.q(i)[k];
    total += err * err + l2_reg * norm;
  }
  return total;
}

MFGradient objective_gradient(const MFModel& m, const RatingMatrix& ratings, double l2_reg) {
  const int f = m.factors;
  MFGradient g{std::vector<double>(m.user_bias.size(), 0.0), std::vector<double>(m.item_bias.size(), 0.0),
               std::vector<double>(m.user_factors.size(), 0.0), std::vector<double>(m.item_factors.size(), 0.0)};
  for (const auto& [key, v] : ratings) {
    const auto [u, i] = key;
    const double err = v - m.raw_predict(u, i);
    g.user_bias[u] += -2.0 * err + 2.0 * l2_reg * m.user_bias[u];
    g.item_bias[i] += -2.0 * err + 2.0 * l2_reg * m.item_bias[i];
    for (int k = 0; k < f; ++k) {
      g.user_factors[static_cast<std::size_t>(u) * f + k] += -2.0 * err * m.q(i)[k] + 2.0 * l2_reg * m.p(u)[k];
      g.item_factors[static_cast<std::size_t>(i) * f + k] += -2.0 * err * m.p(u)[k] + 2.0 * l2_reg * m.q(i)[k];
    }
  }
  return g;
}

double evaluate_rmse(const MFModel& m, const RatingMatrix& test) {
  if (test.empty()) throw ArgumentError("cannot evaluate RMSE on an empty test set");
  double sse = 0.0;
  for (const auto& [key, v] : test) {
    const double d = v - m.predict(key.first, key.second);
    sse += d * d;
  }
  return std::sqrt(sse / static_cast<double>(test.size()));
}

void write_model(std::ostream& out, const MFModel& m) {
  out << "factors " << m.factors << "\nscale " << to_string(m.scale) << "\nglobal_mean "
      << m.global_mean << '\n';
  for (std::size_t u = 0; u < m.user_seen.size(); ++u) {
    if (!m.user_seen[u]) continue;
    out << "user " << u << ' ' << m.user_bias[u];
    for (int k = 0; k < m.factors; ++k) out << ' ' << m.p(static_cast<UserId>(u))[k];
    out << '\n';
  }
  for (std::size_t i = 0; i < m.item_seen.size(); ++i) {
    if (!m.item_seen[i]) continue;
    out << "item " << i << ' ' << m.item_bias[i];
    for (int k = 0; k < m.factors; ++k) out << ' ' << m.q(static_cast<ItemId>(i))[k];
    out << '\n';
  }
}

}  // namespace elicit::mf
