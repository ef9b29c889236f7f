#include "panelreg/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "panelreg/errors.hpp"

namespace panelreg {

bool rho_feasible(const Eigen::VectorXd& rho, double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) return false;
  return rho.allFinite() && rho.squaredNorm() <= 1.0 - lambda;
}

GlseQuery::GlseQuery(Eigen::VectorXd beta_in, Eigen::VectorXd rho_in,
                     double lambda)
    : beta(std::move(beta_in)), rho(std::move(rho_in)) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw ValidationError("lambda must lie in (0, 1)");
  if (!beta.allFinite()) throw ValidationError("beta must be finite");
  if (!rho_feasible(rho, lambda))
    throw ValidationError("|rho|^2 must not exceed 1 - lambda");
}

GlseKQuery::GlseKQuery(std::vector<GlseQuery> params_in)
    : params(std::move(params_in)) {
  if (params.empty()) throw ValidationError("GLSE_k query needs k >= 1");
}

WeightedCoreset::WeightedCoreset(std::vector<CoresetEntry> entries,
                                 CoresetMeta meta)
    : entries_(std::move(entries)), meta_(std::move(meta)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const CoresetEntry& a, const CoresetEntry& b) {
              return a.i != b.i ? a.i < b.i : a.t < b.t;
            });
  for (std::size_t j = 0; j < entries_.size(); ++j) {
    const auto& e = entries_[j];
    if (e.i < 0 || e.t < 0) throw ValidationError("coreset index out of range");
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight))
      throw ValidationError("coreset weights must be finite and nonnegative");
    if (j > 0 && entries_[j - 1].i == e.i && entries_[j - 1].t == e.t)
      throw ValidationError("duplicate coreset entry");
    max_i_ = std::max(max_i_, e.i);
    max_t_ = std::max(max_t_, e.t);
  }
  group_begin_.push_back(0);
  for (std::size_t j = 0; j < entries_.size(); ++j) {
    if (individuals_.empty() || individuals_.back() != entries_[j].i) {
      if (!individuals_.empty()) group_begin_.push_back(j);
      individuals_.push_back(entries_[j].i);
    }
  }
  group_begin_.push_back(entries_.size());
}

double olse_pair(const PanelDataset& ds, int i, int t,
                 const Eigen::VectorXd& beta) {
  const double r = ds.y(i, t) - ds.x(i, t).dot(beta);
  return r * r;
}

double olse_individual(const PanelDataset& ds, int i,
                       const Eigen::VectorXd& beta) {
  double sum = 0.0;
  for (int t = 0; t < ds.n_periods(); ++t) sum += olse_pair(ds, i, t, beta);
  return sum;
}

double olse_total(const PanelDataset& ds, const Eigen::VectorXd& beta) {
  double sum = 0.0;
  for (int i = 0; i < ds.n_individuals(); ++i)
    sum += olse_individual(ds, i, beta);
  return sum;
}

double glse_pair(const PanelDataset& ds, int i, int t,
                 const GlseQuery& query) {
  const double r = ds.y(i, t) - ds.x(i, t).dot(query.beta);
  if (t == 0) {
    return (1.0 - query.rho.squaredNorm()) * r * r;
  }
  const int window = std::min(t, query.q());
  double v = r;
  for (int j = 1; j <= window; ++j) {
    const double lag = ds.y(i, t - j) - ds.x(i, t - j).dot(query.beta);
    v -= query.rho[j - 1] * lag;
  }
  return v * v;
}

double glse_individual(const PanelDataset& ds, int i, const GlseQuery& query) {
  // one pass over the residual sequence; keeps the q most recent residuals
  const int q = query.q();
  const int T = ds.n_periods();
  std::vector<double> lagged(std::size_t(std::max(q, 1)), 0.0);
  double sum = 0.0;
  for (int t = 0; t < T; ++t) {
    const double r = ds.y(i, t) - ds.x(i, t).dot(query.beta);
    if (t == 0) {
      sum += (1.0 - query.rho.squaredNorm()) * r * r;
    } else {
      const int window = std::min(t, q);
      double v = r;
      for (int j = 1; j <= window; ++j)
        v -= query.rho[j - 1] * lagged[std::size_t((t - j) % std::max(q, 1))];
      sum += v * v;
    }
    if (q > 0) lagged[std::size_t(t % q)] = r;
  }
  return sum;
}

double glse_total(const PanelDataset& ds, const GlseQuery& query) {
  double sum = 0.0;
  for (int i = 0; i < ds.n_individuals(); ++i)
    sum += glse_individual(ds, i, query);
  return sum;
}

double glsek_individual(const PanelDataset& ds, int i,
                        const GlseKQuery& query) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : query.params)
    best = std::min(best, glse_individual(ds, i, p));
  return best;
}

double glsek_total(const PanelDataset& ds, const GlseKQuery& query) {
  double sum = 0.0;
  for (int i = 0; i < ds.n_individuals(); ++i)
    sum += glsek_individual(ds, i, query);
  return sum;
}

namespace {

void check_entry_range(const WeightedCoreset& coreset, const PanelDataset& ds) {
  if (coreset.max_individual() >= ds.n_individuals() ||
      coreset.max_period() >= ds.n_periods())
    throw ValidationError("coreset entry outside dataset range");
}

}  // namespace

double coreset_glse_objective(const WeightedCoreset& coreset,
                              const PanelDataset& ds, const GlseQuery& query) {
  check_entry_range(coreset, ds);
  double sum = 0.0;
  for (const auto& e : coreset.entries())
    sum += e.weight * glse_pair(ds, e.i, e.t, query);
  return sum;
}

double coreset_glsek_objective(const WeightedCoreset& coreset,
                               const PanelDataset& ds,
                               const GlseKQuery& query) {
  check_entry_range(coreset, ds);
  double sum = 0.0;
  for (std::size_t g = 0; g < coreset.individuals().size(); ++g) {
    const auto group = coreset.group(g);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : query.params) {
      double inner = 0.0;
      for (const auto& e : group)
        inner += e.weight * glse_pair(ds, e.i, e.t, p);
      best = std::min(best, inner);
    }
    sum += best;
  }
  return sum;
}

Eigen::MatrixXd ar_whitening_matrix(const Eigen::VectorXd& rho,
                                    int n_periods) {
  const int q = static_cast<int>(rho.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n_periods, n_periods);
  p(0, 0) = std::sqrt(std::max(0.0, 1.0 - rho.squaredNorm()));
  for (int t = 1; t < n_periods; ++t) {
    p(t, t) = 1.0;
    for (int j = 1; j <= std::min(t, q); ++j) p(t, t - j) = -rho[j - 1];
  }
  return p;
}

}  // namespace panelreg
