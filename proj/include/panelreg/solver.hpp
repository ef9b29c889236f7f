#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "panelreg/dataset.hpp"
#include "panelreg/objectives.hpp"

namespace panelreg {

struct SolverConfig {
  int max_iterations = 50;
  double tolerance = 1e-8;  // relative objective-improvement threshold
  double lambda = 0.2;
  int q = 1;
  std::optional<Eigen::VectorXd> initial_beta;  // default: OLS solution
  std::optional<Eigen::VectorXd> initial_rho;   // default: zero vector
};

struct FitResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd rho;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective after initialization and each iteration
};

// Minimizer of the (weighted) OLSE objective via orthogonal factorization;
// minimum-norm solution on rank deficiency. Throws DegenerateDataError on
// empty support.
Eigen::VectorXd ols_fit(const PanelDataset& ds);
Eigen::VectorXd ols_fit(const PanelDataset& ds, const WeightedCoreset& coreset);

// Alternating scheme: exact least-squares update of beta given rho, pooled
// lag regression for rho given beta with radial projection into the
// |rho|^2 <= 1-lambda ball, accepted only when the exact objective does not
// increase (halving the step toward the previous rho up to 10 times).
FitResult irls_glse_fit(const PanelDataset& ds, const SolverConfig& cfg);
FitResult irls_glse_fit(const PanelDataset& ds, const WeightedCoreset& coreset,
                        const SolverConfig& cfg);

// glse_total at the fitted parameters
double evaluate_fit(const PanelDataset& ds, const FitResult& fit);

// key=value text report (beta, rho, objective, iterations, converged)
std::string fit_report(const FitResult& fit);
void write_fit_report(const FitResult& fit, const std::string& path);

}  // namespace panelreg
