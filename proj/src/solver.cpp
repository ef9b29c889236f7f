#include "panelreg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "panelreg/errors.hpp"

namespace panelreg {

namespace {

void validate(const SolverConfig& cfg) {
  if (cfg.max_iterations < 1)
    throw ValidationError("max_iterations must be >= 1");
  if (!(cfg.tolerance > 0.0)) throw ValidationError("tolerance must be > 0");
  if (!(cfg.lambda > 0.0 && cfg.lambda < 1.0))
    throw ValidationError("lambda must lie in (0, 1)");
  if (cfg.q < 1) throw ValidationError("q must be >= 1");
}

// visits every (i, t, w) of the support: coreset entries when given one,
// otherwise all unmasked pairs with weight 1
template <typename Fn>
void for_each_weighted(const PanelDataset& ds, const WeightedCoreset* coreset,
                       Fn&& fn) {
  if (coreset) {
    for (const auto& e : coreset->entries()) fn(e.i, e.t, e.weight);
  } else {
    for (int i = 0; i < ds.n_individuals(); ++i)
      for (int t = 0; t < ds.n_periods(); ++t)
        if (!ds.missing(i, t)) fn(i, t, 1.0);
  }
}

Eigen::VectorXd ols_fit_impl(const PanelDataset& ds,
                             const WeightedCoreset* coreset) {
  std::size_t rows = 0;
  for_each_weighted(ds, coreset, [&](int, int, double) { ++rows; });
  if (rows == 0) throw DegenerateDataError("no observations to fit");

  Eigen::MatrixXd design(Eigen::Index(rows), ds.n_features());
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(rows));
  Eigen::Index r = 0;
  for_each_weighted(ds, coreset, [&](int i, int t, double w) {
    const double sw = std::sqrt(w);
    design.row(r) = sw * ds.x(i, t);
    rhs[r] = sw * ds.y(i, t);
    ++r;
  });
  // minimum-norm least-squares solution
  return design.completeOrthogonalDecomposition().solve(rhs);
}

double weighted_glse_objective(const PanelDataset& ds,
                               const WeightedCoreset* coreset,
                               const GlseQuery& query) {
  if (coreset) return coreset_glse_objective(*coreset, ds, query);
  return glse_total(ds, query);
}

// exact minimizer over beta of the weighted GLSE objective at fixed rho:
// every per-pair term is linear in beta after filtering by the lag weights
Eigen::VectorXd beta_step(const PanelDataset& ds,
                          const WeightedCoreset* coreset,
                          const Eigen::VectorXd& rho) {
  const int d = ds.n_features();
  const int q = int(rho.size());
  std::size_t rows = 0;
  for_each_weighted(ds, coreset, [&](int, int, double) { ++rows; });
  if (rows == 0) throw DegenerateDataError("no observations to fit");

  Eigen::MatrixXd design(Eigen::Index(rows), d);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(rows));
  const double head_scale = std::sqrt(std::max(0.0, 1.0 - rho.squaredNorm()));
  Eigen::Index r = 0;
  for_each_weighted(ds, coreset, [&](int i, int t, double w) {
    const double sw = std::sqrt(w);
    if (t == 0) {
      design.row(r) = (sw * head_scale) * ds.x(i, t);
      rhs[r] = sw * head_scale * ds.y(i, t);
    } else {
      Eigen::RowVectorXd xrow = ds.x(i, t);
      double ylag = ds.y(i, t);
      const int window = std::min(t, q);
      for (int j = 1; j <= window; ++j) {
        xrow -= rho[j - 1] * ds.x(i, t - j);
        ylag -= rho[j - 1] * ds.y(i, t - j);
      }
      design.row(r) = sw * xrow;
      rhs[r] = sw * ylag;
    }
    ++r;
  });
  return design.completeOrthogonalDecomposition().solve(rhs);
}

// pooled lag regression of residuals on their q predecessors over the t >= 2
// support, followed by radial projection into the feasible ball
Eigen::VectorXd rho_step(const PanelDataset& ds, const WeightedCoreset* coreset,
                         const Eigen::VectorXd& beta, int q, double lambda,
                         const Eigen::VectorXd& fallback) {
  Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(q, q);
  Eigen::VectorXd moment = Eigen::VectorXd::Zero(q);
  bool any = false;
  for_each_weighted(ds, coreset, [&](int i, int t, double w) {
    if (t == 0) return;
    Eigen::VectorXd lags = Eigen::VectorXd::Zero(q);
    const int window = std::min(t, q);
    for (int j = 1; j <= window; ++j)
      lags[j - 1] = ds.y(i, t - j) - ds.x(i, t - j).dot(beta);
    const double r = ds.y(i, t) - ds.x(i, t).dot(beta);
    normal += w * lags * lags.transpose();
    moment += w * lags * r;
    any = true;
  });
  if (!any) return fallback;

  Eigen::VectorXd rho = normal.completeOrthogonalDecomposition().solve(moment);
  if (!rho.allFinite()) return fallback;
  const double radius2 = 1.0 - lambda;
  if (rho.squaredNorm() > radius2) rho *= std::sqrt(radius2) / rho.norm();
  return rho;
}

FitResult irls_impl(const PanelDataset& ds, const WeightedCoreset* coreset,
                    const SolverConfig& cfg) {
  validate(cfg);
  const int q = cfg.q;

  FitResult fit;
  fit.beta = cfg.initial_beta ? *cfg.initial_beta : ols_fit_impl(ds, coreset);
  if (fit.beta.size() != ds.n_features())
    throw ValidationError("initial beta has wrong dimension");
  fit.rho = cfg.initial_rho ? *cfg.initial_rho : Eigen::VectorXd::Zero(q);
  if (fit.rho.size() != q)
    throw ValidationError("initial rho has wrong dimension");
  if (!rho_feasible(fit.rho, cfg.lambda))
    throw ValidationError("initial rho outside the feasible ball");

  GlseQuery query;
  query.beta = fit.beta;
  query.rho = fit.rho;
  double objective = weighted_glse_objective(ds, coreset, query);
  fit.trace.push_back(objective);

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    // (a) exact least-squares update of beta at fixed rho
    query.beta = beta_step(ds, coreset, query.rho);
    double after_beta = weighted_glse_objective(ds, coreset, query);
    if (after_beta > objective) {
      // the solve is exact, so this only triggers on numerical noise
      query.beta = fit.beta;
      after_beta = objective;
    }

    // (b) lag-regression proposal for rho, backtracked toward the previous
    // value until the exact objective stops increasing
    const Eigen::VectorXd proposal =
        rho_step(ds, coreset, query.beta, q, cfg.lambda, query.rho);
    const Eigen::VectorXd previous_rho = query.rho;
    double after_rho = after_beta;
    Eigen::VectorXd accepted_rho = previous_rho;
    Eigen::VectorXd candidate = proposal;
    for (int half = 0; half <= 10; ++half) {
      query.rho = candidate;
      const double value = weighted_glse_objective(ds, coreset, query);
      if (value <= after_beta) {
        accepted_rho = candidate;
        after_rho = value;
        break;
      }
      candidate = 0.5 * (candidate + previous_rho);
    }
    query.rho = accepted_rho;

    fit.beta = query.beta;
    fit.rho = query.rho;
    ++fit.iterations;
    fit.trace.push_back(after_rho);

    const double improvement =
        (objective - after_rho) / std::max(objective, 1e-300);
    objective = after_rho;
    if (improvement < cfg.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.objective = objective;
  return fit;
}

}  // namespace

Eigen::VectorXd ols_fit(const PanelDataset& ds) {
  return ols_fit_impl(ds, nullptr);
}

Eigen::VectorXd ols_fit(const PanelDataset& ds,
                        const WeightedCoreset& coreset) {
  return ols_fit_impl(ds, &coreset);
}

FitResult irls_glse_fit(const PanelDataset& ds, const SolverConfig& cfg) {
  return irls_impl(ds, nullptr, cfg);
}

FitResult irls_glse_fit(const PanelDataset& ds, const WeightedCoreset& coreset,
                        const SolverConfig& cfg) {
  return irls_impl(ds, &coreset, cfg);
}

double evaluate_fit(const PanelDataset& ds, const FitResult& fit) {
  GlseQuery query;
  query.beta = fit.beta;
  query.rho = fit.rho;
  return glse_total(ds, query);
}

std::string fit_report(const FitResult& fit) {
  std::ostringstream out;
  char buf[40];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "beta=";
  for (Eigen::Index j = 0; j < fit.beta.size(); ++j)
    out << (j ? "," : "") << fmt(fit.beta[j]);
  out << "\nrho=";
  for (Eigen::Index j = 0; j < fit.rho.size(); ++j)
    out << (j ? "," : "") << fmt(fit.rho[j]);
  out << "\nobjective=" << fmt(fit.objective);
  out << "\niterations=" << fit.iterations;
  out << "\nconverged=" << (fit.converged ? "true" : "false") << '\n';
  return out.str();
}

void write_fit_report(const FitResult& fit, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << fit_report(fit);
}

}  // namespace panelreg
