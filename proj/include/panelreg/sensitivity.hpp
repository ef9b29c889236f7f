#pragma once

#include <string>
#include <vector>

#include "panelreg/dataset.hpp"

namespace panelreg {

// Nonnegative importance scores, keyed per pair (i,t) or per individual i,
// together with their recorded total G.
struct SensitivityMap {
  enum class Key { pair, individual };

  Key key = Key::pair;
  int n_individuals = 0;
  int n_periods = 0;             // 1 for individual-keyed maps
  std::vector<double> scores;    // NT (pair) or N (individual), each in [0,1]
  double total = 0.0;            // sum of scores

  double at(int i, int t) const {
    return scores[std::size_t(i) * std::size_t(n_periods) + std::size_t(t)];
  }
  double at(int i) const { return scores[std::size_t(i)]; }
};

// OLSE leverage scores: squared row norms of an orthonormal basis of the
// column space of the stacked NT x (d+1) design Z with rows (x_it, y_it).
// The total equals the numeric rank of Z (at most d+1). Rank decisions use a
// relative singular-value cutoff of 1e-12. Results are memoized against the
// dataset fingerprint.
SensitivityMap olse_leverage(const PanelDataset& ds);

// GLSE sensitivities: s(i,t) = min{1, 2/lambda * (s0(i,t) + sum of the q
// preceding leverages of the same individual)}.
SensitivityMap glse_sensitivity(const PanelDataset& ds, double lambda, int q);

// Per-individual GLSE_k sensitivities from the Gram eigenvalue extremes:
// s0(i) = u_i / (u_i + sum_{i' != i} l_{i'}), s(i) = min{1, 2(q+1)/lambda *
// s0(i)}. Throws DegenerateDataError when every u_i is zero.
SensitivityMap glsek_sensitivity(const PanelDataset& ds, double lambda, int q);

// Dump `i,t,score` (pair-keyed) or `i,score` (individual-keyed), 1-based.
void write_sensitivity_csv(const SensitivityMap& map, const std::string& path);

}  // namespace panelreg
