#include "panelreg/coresets.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "panelreg/errors.hpp"
#include "panelreg/rng.hpp"
#include "panelreg/sensitivity.hpp"
#include "parallel.hpp"

namespace panelreg {

namespace {

constexpr std::uint64_t kPairDrawStream = 0x70616972;    // cglse pair draws
constexpr std::uint64_t kStage1Stream = 0x73746731;      // cglse_k individuals
constexpr std::uint64_t kStage2Stream = 0x73746732;      // per-individual builds
constexpr std::uint64_t kUniformStream = 0x756e6966;

}  // namespace

void validate(const CoresetConfig& cfg) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
    throw ValidationError("epsilon must lie in (0, 1)");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
    throw ValidationError("delta must lie in (0, 1)");
  if (!(cfg.lambda > 0.0 && cfg.lambda < 1.0))
    throw ValidationError("lambda must lie in (0, 1)");
  if (cfg.q < 1) throw ValidationError("q must be >= 1");
  if (cfg.k < 1) throw ValidationError("k must be >= 1");
  if (!(cfg.fl_constant > 0.0))
    throw ValidationError("fl_constant must be positive");
  if (cfg.size_override && *cfg.size_override < 1)
    throw ValidationError("size override must be >= 1");
  if (cfg.stage2_size_override && *cfg.stage2_size_override < 1)
    throw ValidationError("stage-2 size override must be >= 1");
}

double glse_pseudo_dimension(int q, int d) {
  return double(q + d) * double(q) * double(d);
}

double glsek_pseudo_dimension(int k, int q, int d) {
  return double(k) * double(k) * double(q) * double(q) * double(q + d) *
         double(d) * double(d);
}

std::size_t fl_sample_size(const CoresetConfig& cfg, double total_sensitivity,
                           double dim) {
  if (cfg.size_override) return *cfg.size_override;
  if (!(total_sensitivity > 0.0))
    throw ValidationError("total sensitivity must be positive");
  if (!(dim >= 1.0)) throw ValidationError("pseudo-dimension must be >= 1");
  const double log_g = std::max(0.0, std::log(total_sensitivity));
  const double size = cfg.fl_constant / (cfg.epsilon * cfg.epsilon) *
                      total_sensitivity *
                      (dim * log_g + std::log(1.0 / cfg.delta));
  return std::size_t(std::max(1.0, std::ceil(size)));
}

namespace {

// shared importance-sampling core: M draws proportional to scores, weight
// G/(M s) per draw, duplicates merged
std::vector<std::pair<std::size_t, double>> fl_draws(
    const std::vector<double>& scores, double total, std::size_t draws,
    Rng rng) {
  std::vector<std::size_t> support;
  std::vector<double> cumulative;
  support.reserve(scores.size());
  cumulative.reserve(scores.size());
  double running = 0.0;
  for (std::size_t p = 0; p < scores.size(); ++p) {
    if (scores[p] > 0.0) {
      running += scores[p];
      support.push_back(p);
      cumulative.push_back(running);
    }
  }
  if (support.empty())
    throw DegenerateDataError("every sensitivity score is zero");

  std::map<std::size_t, std::size_t> counts;
  for (std::size_t m = 0; m < draws; ++m) ++counts[support[rng.discrete(cumulative)]];

  std::vector<std::pair<std::size_t, double>> merged;
  merged.reserve(counts.size());
  for (const auto& [p, count] : counts) {
    const double weight =
        double(count) * total / (double(draws) * scores[p]);
    merged.emplace_back(p, weight);
  }
  return merged;
}

}  // namespace

WeightedCoreset cglse(const PanelDataset& ds, const CoresetConfig& cfg) {
  validate(cfg);
  const SensitivityMap s = glse_sensitivity(ds, cfg.lambda, cfg.q);
  if (!(s.total > 0.0))
    throw DegenerateDataError("every GLSE sensitivity is zero");

  const std::size_t draws = fl_sample_size(
      cfg, s.total, glse_pseudo_dimension(cfg.q, ds.n_features()));
  const auto merged = fl_draws(s.scores, s.total, draws,
                               Rng(cfg.seed).substream(kPairDrawStream));

  std::vector<CoresetEntry> entries;
  entries.reserve(merged.size());
  for (const auto& [p, weight] : merged) {
    const int i = int(p / std::size_t(ds.n_periods()));
    const int t = int(p % std::size_t(ds.n_periods()));
    entries.push_back({i, t, weight});
  }

  CoresetMeta meta;
  meta.method = "cglse";
  meta.epsilon = cfg.epsilon;
  meta.delta = cfg.delta;
  meta.lambda = cfg.lambda;
  meta.q = cfg.q;
  meta.seed = cfg.seed;
  meta.total_sensitivity = s.total;
  meta.draws = draws;
  return WeightedCoreset(std::move(entries), std::move(meta));
}

WeightedCoreset cglse_k(const PanelDataset& ds, const CoresetConfig& cfg) {
  validate(cfg);
  if (!std::isfinite(m_bound(ds)))
    std::cerr << "warning: dataset is not M-bounded; GLSE_k sensitivities "
                 "degenerate toward uniform\n";

  const SensitivityMap s = glsek_sensitivity(ds, cfg.lambda, cfg.q);
  if (!(s.total > 0.0))
    throw DegenerateDataError("every GLSE_k sensitivity is zero");

  // stage 1: individuals, at accuracy epsilon/3
  CoresetConfig stage1 = cfg;
  stage1.epsilon = cfg.epsilon / 3.0;
  const std::size_t gamma = fl_sample_size(
      stage1, s.total,
      glsek_pseudo_dimension(cfg.k, cfg.q, ds.n_features()));
  const auto selected = fl_draws(s.scores, s.total, gamma,
                                 Rng(cfg.seed).substream(kStage1Stream));

  // stage 2: one GLSE coreset per selected individual, epsilon/3 and failure
  // budget 1/(20 Gamma); substream keyed by the individual so the draws are
  // independent of stage-1 order
  CoresetConfig stage2 = cfg;
  stage2.epsilon = cfg.epsilon / 3.0;
  stage2.delta = std::min(0.5, 1.0 / (20.0 * double(gamma)));
  stage2.size_override = cfg.stage2_size_override;
  stage2.stage2_size_override.reset();

  std::vector<std::vector<CoresetEntry>> per_individual(selected.size());
  detail::parallel_for(selected.size(), cfg.threads, [&](std::size_t si) {
    const int individual = int(selected[si].first);
    const double individual_weight = selected[si].second;
    CoresetConfig sub_cfg = stage2;
    sub_cfg.seed =
        Rng::mix(Rng::mix(cfg.seed, kStage2Stream), std::uint64_t(individual));
    const WeightedCoreset sub =
        cglse(ds.individual_slice(individual), sub_cfg);
    auto& out = per_individual[si];
    out.reserve(sub.size());
    for (const auto& e : sub.entries())
      out.push_back({individual, e.t, individual_weight * e.weight});
  });

  std::vector<CoresetEntry> entries;
  for (auto& chunk : per_individual)
    entries.insert(entries.end(), chunk.begin(), chunk.end());

  CoresetMeta meta;
  meta.method = "cglse-k";
  meta.epsilon = cfg.epsilon;
  meta.delta = cfg.delta;
  meta.lambda = cfg.lambda;
  meta.q = cfg.q;
  meta.k = cfg.k;
  meta.seed = cfg.seed;
  meta.total_sensitivity = s.total;
  meta.draws = gamma;
  return WeightedCoreset(std::move(entries), std::move(meta));
}

WeightedCoreset uniform_coreset(const PanelDataset& ds, std::size_t m,
                                std::uint64_t seed) {
  std::vector<std::size_t> support;
  support.reserve(ds.observed_pairs());
  for (std::size_t p = 0; p < ds.n_pairs(); ++p) {
    const int i = int(p / std::size_t(ds.n_periods()));
    const int t = int(p % std::size_t(ds.n_periods()));
    if (!ds.missing(i, t)) support.push_back(p);
  }
  if (m < 1 || m > support.size())
    throw ValidationError("uniform sample size must lie in [1, " +
                          std::to_string(support.size()) + "]");

  // partial Fisher-Yates over the unmasked support
  Rng rng = Rng(seed).substream(kUniformStream);
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t r = j + std::size_t(rng.below(support.size() - j));
    std::swap(support[j], support[r]);
  }

  const double weight = double(ds.n_pairs()) / double(m);
  std::vector<CoresetEntry> entries;
  entries.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const int i = int(support[j] / std::size_t(ds.n_periods()));
    const int t = int(support[j] % std::size_t(ds.n_periods()));
    entries.push_back({i, t, weight});
  }

  CoresetMeta meta;
  meta.method = "uniform";
  meta.seed = seed;
  meta.draws = m;
  return WeightedCoreset(std::move(entries), std::move(meta));
}

namespace {

// one Caratheodory elimination pass: reduces the column count of P to at
// most rows+1 while preserving sum_j u_j P_j and sum_j u_j. Weights stay
// nonnegative; indices track surviving columns.
void caratheodory_reduce(Eigen::MatrixXd& points, Eigen::VectorXd& weights,
                         std::vector<std::size_t>& indices) {
  const Eigen::Index dim = points.rows();
  while (points.cols() > dim + 1) {
    const Eigen::Index m = points.cols();
    Eigen::MatrixXd diffs(dim, m - 1);
    for (Eigen::Index j = 1; j < m; ++j)
      diffs.col(j - 1) = points.col(j) - points.col(0);

    // affine dependence: v in null(diffs) lifted so the entries sum to zero
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(diffs, Eigen::ComputeFullV);
    Eigen::VectorXd v(m);
    v.tail(m - 1) = svd.matrixV().col(m - 2);
    v[0] = -v.tail(m - 1).sum();

    double alpha = std::numeric_limits<double>::infinity();
    Eigen::Index drop = -1;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (v[j] > 0.0 && weights[j] / v[j] < alpha) {
        alpha = weights[j] / v[j];
        drop = j;
      }
    }
    if (drop < 0) {
      // null vector pointed the wrong way; flip it
      v = -v;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (v[j] > 0.0 && weights[j] / v[j] < alpha) {
          alpha = weights[j] / v[j];
          drop = j;
        }
      }
    }

    weights -= alpha * v;
    weights[drop] = 0.0;

    Eigen::Index kept = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (weights[j] > 0.0) {
        points.col(kept) = points.col(j);
        weights[kept] = weights[j];
        indices[std::size_t(kept)] = indices[std::size_t(j)];
        ++kept;
      }
    }
    points.conservativeResize(Eigen::NoChange, kept);
    weights.conservativeResize(kept);
    indices.resize(std::size_t(kept));
  }
}

// balanced-cluster acceleration: sketch clusters by their weighted means,
// reduce the sketches, keep members of surviving clusters, repeat
void fast_caratheodory(Eigen::MatrixXd& points, Eigen::VectorXd& weights,
                       std::vector<std::size_t>& indices, Eigen::Index clusters) {
  const Eigen::Index dim = points.rows();
  while (points.cols() > dim + 1) {
    if (points.cols() <= clusters) {
      caratheodory_reduce(points, weights, indices);
      return;
    }
    const Eigen::Index n = points.cols();
    Eigen::MatrixXd means(dim, clusters);
    Eigen::VectorXd mass(clusters);
    std::vector<Eigen::Index> bounds(std::size_t(clusters) + 1);
    for (Eigen::Index c = 0; c <= clusters; ++c)
      bounds[std::size_t(c)] = c * n / clusters;
    for (Eigen::Index c = 0; c < clusters; ++c) {
      const Eigen::Index b = bounds[std::size_t(c)];
      const Eigen::Index e = bounds[std::size_t(c) + 1];
      double total = 0.0;
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
      for (Eigen::Index j = b; j < e; ++j) {
        total += weights[j];
        acc += weights[j] * points.col(j);
      }
      mass[c] = total;
      means.col(c) = acc / total;
    }

    std::vector<std::size_t> cluster_ids(static_cast<std::size_t>(clusters));
    for (std::size_t c = 0; c < std::size_t(clusters); ++c) cluster_ids[c] = c;
    caratheodory_reduce(means, mass, cluster_ids);

    // surviving cluster c with new mass W contributes its members with
    // weights rescaled by W / (old cluster mass)
    Eigen::MatrixXd next_points(dim, n);
    Eigen::VectorXd next_weights(n);
    std::vector<std::size_t> next_indices(static_cast<std::size_t>(n));
    Eigen::Index kept = 0;
    for (std::size_t s = 0; s < cluster_ids.size(); ++s) {
      const Eigen::Index c = Eigen::Index(cluster_ids[s]);
      const Eigen::Index b = bounds[std::size_t(c)];
      const Eigen::Index e = bounds[std::size_t(c) + 1];
      double old_mass = 0.0;
      for (Eigen::Index j = b; j < e; ++j) old_mass += weights[j];
      const double scale = mass[Eigen::Index(s)] / old_mass;
      for (Eigen::Index j = b; j < e; ++j) {
        next_points.col(kept) = points.col(j);
        next_weights[kept] = weights[j] * scale;
        next_indices[std::size_t(kept)] = indices[std::size_t(j)];
        ++kept;
      }
    }
    points = next_points.leftCols(kept);
    weights = next_weights.head(kept);
    next_indices.resize(std::size_t(kept));
    indices = std::move(next_indices);
  }
}

// Lawson-Hanson nonnegative least squares, used to polish the final convex
// weights when the embedded points are nearly coplanar
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index n = a.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(std::size_t(n), false);
  const double tol = 1e-12 * a.norm() * b.norm() + 1e-300;

  for (int outer = 0; outer < 4 * int(n) + 16; ++outer) {
    const Eigen::VectorXd gradient = a.transpose() * (b - a * x);
    Eigen::Index best = -1;
    double best_grad = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[std::size_t(j)] && gradient[j] > best_grad) {
        best_grad = gradient[j];
        best = j;
      }
    }
    if (best < 0) break;
    passive[std::size_t(best)] = true;

    for (int inner = 0; inner < 4 * int(n) + 16; ++inner) {
      std::vector<Eigen::Index> active_cols;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[std::size_t(j)]) active_cols.push_back(j);
      if (active_cols.empty()) break;
      Eigen::MatrixXd sub(a.rows(), Eigen::Index(active_cols.size()));
      for (std::size_t c = 0; c < active_cols.size(); ++c)
        sub.col(Eigen::Index(c)) = a.col(active_cols[c]);
      const Eigen::VectorXd z =
          sub.completeOrthogonalDecomposition().solve(b);

      bool all_positive = true;
      double alpha = 1.0;
      for (std::size_t c = 0; c < active_cols.size(); ++c) {
        if (z[Eigen::Index(c)] <= 0.0) {
          all_positive = false;
          const double xj = x[active_cols[c]];
          const double denom = xj - z[Eigen::Index(c)];
          if (denom > 0.0) alpha = std::min(alpha, xj / denom);
        }
      }
      if (all_positive) {
        x.setZero();
        for (std::size_t c = 0; c < active_cols.size(); ++c)
          x[active_cols[c]] = z[Eigen::Index(c)];
        break;
      }
      for (std::size_t c = 0; c < active_cols.size(); ++c) {
        const Eigen::Index j = active_cols[c];
        x[j] += alpha * (z[Eigen::Index(c)] - x[j]);
        if (x[j] <= 1e-14) {
          x[j] = 0.0;
          passive[std::size_t(j)] = false;
        }
      }
    }
  }
  return x;
}

}  // namespace

WeightedCoreset caratheodory_olse_coreset(const PanelDataset& ds) {
  const int d1 = ds.n_features() + 1;
  const Eigen::Index dim = Eigen::Index(d1) * d1;  // outer-product embedding

  std::vector<std::size_t> pair_ids;
  pair_ids.reserve(ds.observed_pairs());
  for (std::size_t p = 0; p < ds.n_pairs(); ++p) {
    const int i = int(p / std::size_t(ds.n_periods()));
    const int t = int(p % std::size_t(ds.n_periods()));
    if (!ds.missing(i, t)) pair_ids.push_back(p);
  }

  CoresetMeta meta;
  meta.method = "caratheodory";

  const std::size_t n = pair_ids.size();
  meta.draws = n;
  if (n <= std::size_t(dim) + 1) {
    std::vector<CoresetEntry> entries;
    entries.reserve(n);
    for (const std::size_t p : pair_ids)
      entries.push_back({int(p / std::size_t(ds.n_periods())),
                         int(p % std::size_t(ds.n_periods())), 1.0});
    return WeightedCoreset(std::move(entries), std::move(meta));
  }

  Eigen::MatrixXd points(dim, Eigen::Index(n));
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t p = pair_ids[j];
    Eigen::VectorXd z(d1);
    z.head(ds.n_features()) = ds.x_rows().row(Eigen::Index(p));
    z[d1 - 1] = ds.y_flat()[Eigen::Index(p)];
    const Eigen::MatrixXd outer = z * z.transpose();
    points.col(Eigen::Index(j)) =
        Eigen::Map<const Eigen::VectorXd>(outer.data(), dim);
  }
  const Eigen::VectorXd target = points.rowwise().mean();

  Eigen::MatrixXd work = points;
  Eigen::VectorXd weights =
      Eigen::VectorXd::Constant(Eigen::Index(n), 1.0 / double(n));
  std::vector<std::size_t> survivors(n);
  for (std::size_t j = 0; j < n; ++j) survivors[j] = j;

  fast_caratheodory(work, weights, survivors, 3 * dim);

  // polish the convex combination on the surviving support; keeps the
  // weighted Gram exact when eliminations hit nearly coplanar embeddings.
  // The appended row pins the weight sum at one.
  const double sum_scale = std::max(1.0, work.colwise().norm().mean());
  Eigen::MatrixXd augmented(dim + 1, work.cols());
  augmented.topRows(dim) = work;
  augmented.row(dim).setConstant(sum_scale);
  Eigen::VectorXd augmented_target(dim + 1);
  augmented_target.head(dim) = target;
  augmented_target[dim] = sum_scale;
  const Eigen::VectorXd polished = nnls(augmented, augmented_target);
  if ((augmented * polished - augmented_target).norm() <=
      (augmented * weights - augmented_target).norm())
    weights = polished;

  // drop negligible coefficients, renormalize to a convex combination
  const double cutoff = 1e-12 * weights.maxCoeff();
  double mass = 0.0;
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    if (weights[j] < cutoff) weights[j] = 0.0;
    mass += weights[j];
  }
  weights /= mass;

  std::vector<CoresetEntry> entries;
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    if (weights[j] <= 0.0) continue;
    const std::size_t p = pair_ids[survivors[std::size_t(j)]];
    entries.push_back({int(p / std::size_t(ds.n_periods())),
                       int(p % std::size_t(ds.n_periods())),
                       double(n) * weights[j]});
  }
  return WeightedCoreset(std::move(entries), std::move(meta));
}

void write_coreset_csv(const WeightedCoreset& coreset,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const auto& m = coreset.meta();
  char buf[64];
  out << "# method=" << m.method << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", m.epsilon);
  out << "# epsilon=" << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", m.delta);
  out << "# delta=" << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", m.lambda);
  out << "# lambda=" << buf << '\n';
  out << "# q=" << m.q << '\n';
  out << "# k=" << m.k << '\n';
  out << "# seed=" << m.seed << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", m.total_sensitivity);
  out << "# total_sensitivity=" << buf << '\n';
  out << "# draws=" << m.draws << '\n';
  out << "i,t,weight\n";
  for (const auto& e : coreset.entries()) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.weight);
    out << (e.i + 1) << ',' << (e.t + 1) << ',' << buf << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

WeightedCoreset read_coreset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  CoresetMeta meta;
  std::vector<CoresetEntry> entries;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      const auto eq = body.find('=');
      if (eq == std::string::npos) continue;
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      const std::string key = trim(body.substr(0, eq));
      const std::string value = trim(body.substr(eq + 1));
      try {
        if (key == "method") meta.method = value;
        else if (key == "epsilon") meta.epsilon = std::stod(value);
        else if (key == "delta") meta.delta = std::stod(value);
        else if (key == "lambda") meta.lambda = std::stod(value);
        else if (key == "q") meta.q = std::stoi(value);
        else if (key == "k") meta.k = std::stoi(value);
        else if (key == "seed") meta.seed = std::stoull(value);
        else if (key == "total_sensitivity") meta.total_sensitivity = std::stod(value);
        else if (key == "draws") meta.draws = std::stoull(value);
      } catch (const std::exception&) {
        throw ParseError("bad metadata value for '" + key + "'", line_no);
      }
      continue;
    }
    if (!header_seen) {
      if (line.rfind("i,t,weight", 0) != 0)
        throw ParseError("expected header i,t,weight", line_no);
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string f0, f1, f2;
    if (!std::getline(ss, f0, ',') || !std::getline(ss, f1, ',') ||
        !std::getline(ss, f2))
      throw ParseError("expected i,t,weight row", line_no);
    try {
      entries.push_back(
          {std::stoi(f0) - 1, std::stoi(f1) - 1, std::stod(f2)});
    } catch (const std::exception&) {
      throw ParseError("cannot parse coreset row", line_no);
    }
  }
  return WeightedCoreset(std::move(entries), std::move(meta));
}

}  // namespace panelreg
