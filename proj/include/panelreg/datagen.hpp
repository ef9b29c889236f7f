#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "panelreg/dataset.hpp"
#include "panelreg/objectives.hpp"
#include "panelreg/rng.hpp"

namespace panelreg {

enum class ErrorDist { gaussian, cauchy };

struct GenConfig {
  int n_individuals = 500;
  int n_periods = 500;
  int n_features = 10;
  int q = 1;
  double lambda = 0.2;
  ErrorDist error_dist = ErrorDist::gaussian;
  std::uint64_t seed = 0;
  // multiplies the innovation draws; 0 gives exact-fit data
  double noise_scale = 1.0;
  // fix the last feature coordinate to 1 (requires d >= 2)
  bool fixed_intercept = true;
};

struct SyntheticPanel {
  PanelDataset data;
  Eigen::VectorXd beta;  // generating regression vector
  Eigen::VectorXd rho;   // generating autocorrelation vector
};

// Per-individual means tau * (uniform unit vector) with tau ~ U[0,5],
// observations N(mean, |mean|^2 I), beta ~ N(0,I), rho with uniform direction
// and length U[0, 1-lambda], AR(q) error recursion with N(0,1) or Cauchy(0,2)
// innovations, y = x^T beta + e.
SyntheticPanel synthetic_panel(const GenConfig& cfg);

// beta ~ N(0, I_d); rho drawn as in the synthetic generator. Valid for the
// given lambda by construction.
GlseQuery random_query(int d, int q, double lambda, std::uint64_t seed);
GlseQuery random_query(int d, int q, double lambda, Rng& rng);

// k independent GLSE parameter draws
GlseKQuery random_k_query(int d, int q, int k, double lambda, Rng& rng);

// T=1, d=2 adversarial instance: x_i1 = (4^i, 4^-i), y_i1 = 0, together with
// the per-individual certificate queries (k=2, rho=0). N is capped at 15 to
// keep the 16^|i-j| ratios inside double range.
struct LowerBoundInstance {
  PanelDataset data;
  std::vector<GlseKQuery> certificates;  // certificate for individual i at [i]
};
LowerBoundInstance lower_bound_instance(int n_individuals);

// key=value sidecar with the generator settings and truth parameters
void write_truth_sidecar(const SyntheticPanel& panel, const GenConfig& cfg,
                         const std::string& path);

}  // namespace panelreg
