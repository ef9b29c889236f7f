#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace panelreg {

// Dense N x T x d panel with an explicit missing-pair mask. Missing pairs are
// stored as (x, y) = (0, 0), so they contribute exactly zero to every
// regression objective and every Gram matrix. Immutable after construction.
class PanelDataset {
 public:
  // x: NT x d with row i*T + t holding x_it; y: flat NT vector; missing:
  // NT flags (non-zero = missing). Throws ValidationError on non-finite
  // values, bad shapes, or masked pairs that are not stored as zero.
  PanelDataset(int n_individuals, int n_periods, int n_features,
               Eigen::MatrixXd x, Eigen::VectorXd y,
               std::vector<std::uint8_t> missing);

  int n_individuals() const { return n_; }
  int n_periods() const { return t_; }
  int n_features() const { return d_; }

  std::size_t pair_index(int i, int t) const {
    return std::size_t(i) * std::size_t(t_) + std::size_t(t);
  }
  auto x(int i, int t) const { return x_.row(Eigen::Index(pair_index(i, t))); }
  double y(int i, int t) const { return y_[Eigen::Index(pair_index(i, t))]; }
  bool missing(int i, int t) const { return missing_[pair_index(i, t)] != 0; }

  const Eigen::MatrixXd& x_rows() const { return x_; }
  const Eigen::VectorXd& y_flat() const { return y_; }

  std::size_t n_pairs() const { return std::size_t(n_) * std::size_t(t_); }
  std::size_t observed_pairs() const { return observed_; }

  // Z^(i): T x (d+1) matrix whose t-th row is (x_it, y_it)
  Eigen::MatrixXd individual_design(int i) const;

  // Single-individual slice as its own 1 x T x d dataset.
  PanelDataset individual_slice(int i) const;

  // content hash for memoizing per-dataset computations
  std::uint64_t fingerprint() const { return fingerprint_; }

 private:
  int n_, t_, d_;
  Eigen::MatrixXd x_;                  // NT x d
  Eigen::VectorXd y_;                  // NT
  std::vector<std::uint8_t> missing_;  // NT
  std::size_t observed_;
  std::uint64_t fingerprint_;
};

// Extreme eigenvalues of the per-individual Gram matrices (Z^(i))^T Z^(i).
struct IndividualGram {
  std::vector<double> u;  // largest eigenvalue, clamped at 0
  std::vector<double> l;  // smallest eigenvalue, clamped at 0
};

// CSV schema: header `individual,time,x_1,...,x_d,y`, integer individual ids
// and 1-based time indices, any row order. Absent (i,t) combinations become
// masked pairs. Throws ParseError (with line number) on malformed rows and
// ValidationError on duplicates or non-finite values.
PanelDataset load_csv(const std::string& path);

// Writes the same schema; masked pairs are omitted. Individuals and times are
// emitted 1-based.
void write_csv(const PanelDataset& ds, const std::string& path);

IndividualGram gram_extremes(const PanelDataset& ds);

// max_i u_i / l_i, or +infinity when some individual is rank deficient.
// Eigenvalues below 1e-12 * u_i count as zero.
double m_bound(const IndividualGram& grams);
double m_bound(const PanelDataset& ds);

}  // namespace panelreg
