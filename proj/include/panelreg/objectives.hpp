#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "panelreg/dataset.hpp"

namespace panelreg {

// true iff |rho|^2 <= 1 - lambda (membership in the closed ball B^q_{1-lambda})
bool rho_feasible(const Eigen::VectorXd& rho, double lambda);

// GLSE parameters: regression vector beta and AR(q) autocorrelation vector
// rho. The validating constructor rejects (rather than clamps) rho outside
// the |rho|^2 <= 1 - lambda ball.
struct GlseQuery {
  Eigen::VectorXd beta;
  Eigen::VectorXd rho;

  GlseQuery() = default;
  GlseQuery(Eigen::VectorXd beta_in, Eigen::VectorXd rho_in, double lambda);

  int q() const { return static_cast<int>(rho.size()); }
};

// k-tuple of GLSE parameter pairs.
struct GlseKQuery {
  std::vector<GlseQuery> params;

  GlseKQuery() = default;
  explicit GlseKQuery(std::vector<GlseQuery> params_in);

  int k() const { return static_cast<int>(params.size()); }
};

struct CoresetEntry {
  int i;
  int t;
  double weight;
};

// Construction metadata carried by a coreset; serialized into the CSV header.
struct CoresetMeta {
  std::string method;
  double epsilon = 0.0;
  double delta = 0.0;
  double lambda = 0.0;
  int q = 0;
  int k = 1;
  std::uint64_t seed = 0;
  double total_sensitivity = 0.0;  // G of the sampling distribution
  std::size_t draws = 0;           // i.i.d. draws before duplicate merging
};

// Weighted set of (individual, time) pairs. Entries are kept sorted by (i,t)
// and unique; duplicate merging is the builder's job. Exposes the grouping
// views I_S (individuals present) and J_{S,i} (entries of one individual).
class WeightedCoreset {
 public:
  WeightedCoreset() = default;
  WeightedCoreset(std::vector<CoresetEntry> entries, CoresetMeta meta);

  const std::vector<CoresetEntry>& entries() const { return entries_; }
  const CoresetMeta& meta() const { return meta_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // I_S, ascending
  const std::vector<int>& individuals() const { return individuals_; }
  // J_{S,g}: entries of individuals()[g]
  std::span<const CoresetEntry> group(std::size_t g) const {
    return std::span<const CoresetEntry>(entries_.data() + group_begin_[g],
                                         group_begin_[g + 1] - group_begin_[g]);
  }

  int max_individual() const { return max_i_; }
  int max_period() const { return max_t_; }

 private:
  std::vector<CoresetEntry> entries_;
  CoresetMeta meta_;
  std::vector<int> individuals_;
  std::vector<std::size_t> group_begin_;  // individuals_.size() + 1 offsets
  int max_i_ = -1;
  int max_t_ = -1;
};

// (y_it - x_it^T beta)^2; zero for masked pairs by the (0,0) convention
double olse_pair(const PanelDataset& ds, int i, int t,
                 const Eigen::VectorXd& beta);
double olse_individual(const PanelDataset& ds, int i,
                       const Eigen::VectorXd& beta);
double olse_total(const PanelDataset& ds, const Eigen::VectorXd& beta);

// AR(q) per-pair cost: (1-|rho|^2) r_i1^2 at t=1, squared lag-filtered
// residual for t >= 2. t is 0-based here; the lag window is min(t, q).
double glse_pair(const PanelDataset& ds, int i, int t, const GlseQuery& query);
double glse_individual(const PanelDataset& ds, int i, const GlseQuery& query);
double glse_total(const PanelDataset& ds, const GlseQuery& query);

double glsek_individual(const PanelDataset& ds, int i, const GlseKQuery& query);
double glsek_total(const PanelDataset& ds, const GlseKQuery& query);

// sum over entries of w(i,t) * glse_pair(i,t)
double coreset_glse_objective(const WeightedCoreset& coreset,
                              const PanelDataset& ds, const GlseQuery& query);
// per surviving individual, min over l of the weighted time-sum, then summed
double coreset_glsek_objective(const WeightedCoreset& coreset,
                               const PanelDataset& ds, const GlseKQuery& query);

// T x T lower-triangular whitening factor P of the AR(q) covariance,
// Omega^{-1} = P^T P: first diagonal entry sqrt(1-|rho|^2), unit diagonal
// below, -rho_j on the j-th subdiagonal within the lag window.
Eigen::MatrixXd ar_whitening_matrix(const Eigen::VectorXd& rho, int n_periods);

}  // namespace panelreg
