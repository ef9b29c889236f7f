#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "panelreg/dataset.hpp"
#include "panelreg/objectives.hpp"

namespace panelreg {

struct CoresetConfig {
  double epsilon = 0.1;
  double delta = 0.1;
  double lambda = 0.2;
  int q = 1;
  int k = 1;  // GLSE_k only
  // scales the big-O sample-size formula, whose constant is unspecified;
  // benchmarks pin sizes via size_override instead
  double fl_constant = 1.0;
  std::optional<std::size_t> size_override;         // M (cglse) or Gamma (cglse_k)
  std::optional<std::size_t> stage2_size_override;  // per-individual M in cglse_k
  std::uint64_t seed = 0;
  int threads = 1;
};

// throws ValidationError when a parameter is out of range
void validate(const CoresetConfig& cfg);

// pseudo-dimension bounds used in the sample-size formula
double glse_pseudo_dimension(int q, int d);            // (q+d) q d
double glsek_pseudo_dimension(int k, int q, int d);    // k^2 q^2 (q+d) d^2

// ceil(fl_constant * eps^-2 * G * (dim * max(log G, 0) + log(1/delta))),
// floored at 1; size_override bypasses the formula.
std::size_t fl_sample_size(const CoresetConfig& cfg, double total_sensitivity,
                           double dim);

// Importance sampling of individual-time pairs proportional to GLSE
// sensitivities; M i.i.d. draws with replacement, weight G/(M s(i,t)) per
// draw, duplicates merged by summing weights. Deterministic given cfg.seed.
WeightedCoreset cglse(const PanelDataset& ds, const CoresetConfig& cfg);

// Two-stage GLSE_k construction: Gamma individuals sampled proportional to
// per-individual sensitivities, then one GLSE coreset per selected individual
// at error epsilon/3 and failure budget 1/(20 Gamma). Final weights are the
// products of the stage weights.
WeightedCoreset cglse_k(const PanelDataset& ds, const CoresetConfig& cfg);

// m distinct unmasked pairs drawn uniformly without replacement, each with
// weight NT/m.
WeightedCoreset uniform_coreset(const PanelDataset& ds, std::size_t m,
                                std::uint64_t seed);

// Exact OLSE coreset of at most (d+1)^2 + 1 pairs whose weighted Gram equals
// the full Gram, via Caratheodory reduction of the outer-product embedding
// with balanced-cluster halving.
WeightedCoreset caratheodory_olse_coreset(const PanelDataset& ds);

// CSV `i,t,weight` (1-based indices) with the construction metadata carried
// in `# key=value` header comments.
void write_coreset_csv(const WeightedCoreset& coreset, const std::string& path);
WeightedCoreset read_coreset_csv(const std::string& path);

}  // namespace panelreg
