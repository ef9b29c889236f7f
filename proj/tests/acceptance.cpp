// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Statistical criteria use fixed seeds, so runs are
// reproducible.

#include <Eigen/Dense>
#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "panelreg/bench.hpp"
#include "panelreg/coresets.hpp"
#include "panelreg/datagen.hpp"
#include "panelreg/objectives.hpp"
#include "panelreg/rng.hpp"
#include "panelreg/sensitivity.hpp"
#include "panelreg/solver.hpp"

using namespace panelreg;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void report(int id, const std::string& name, bool pass, double seconds,
            const std::string& detail) {
  std::printf("[%s] criterion %2d: %-28s (%7.2fs) %s\n",
              pass ? "PASS" : "FAIL", id, name.c_str(), seconds,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

PanelDataset random_panel(int n, int T, int d, Rng& rng, double mask_rate) {
  const std::size_t nt = std::size_t(n) * std::size_t(T);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(Eigen::Index(nt), d);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(Eigen::Index(nt));
  std::vector<std::uint8_t> missing(nt, 0);
  for (std::size_t p = 0; p < nt; ++p) {
    if (mask_rate > 0.0 && rng.uniform() < mask_rate) {
      missing[p] = 1;
      continue;
    }
    for (int j = 0; j < d; ++j) x(Eigen::Index(p), j) = rng.normal();
    y[Eigen::Index(p)] = rng.normal();
  }
  return PanelDataset(n, T, d, std::move(x), std::move(y), std::move(missing));
}

GlseQuery sample_query(int d, int q, double lambda, Rng& rng) {
  GlseQuery query;
  query.beta.resize(d);
  for (int j = 0; j < d; ++j) query.beta[j] = rng.normal();
  query.rho.resize(q);
  for (int j = 0; j < q; ++j) query.rho[j] = rng.normal();
  const double cap = std::sqrt((1.0 - lambda) * rng.uniform());
  if (query.rho.norm() > 0.0) query.rho *= cap / query.rho.norm();
  return query;
}

// every individual design has orthonormal columns, so each Gram is the
// identity and the dataset is 1-bounded
PanelDataset identity_gram_panel(int n, int T, int d, Rng& rng) {
  const std::size_t nt = std::size_t(n) * std::size_t(T);
  Eigen::MatrixXd x(Eigen::Index(nt), d);
  Eigen::VectorXd y(static_cast<Eigen::Index>(nt));
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd g(T, d + 1);
    for (Eigen::Index r = 0; r < T; ++r)
      for (Eigen::Index c = 0; c < d + 1; ++c) g(r, c) = rng.normal();
    const Eigen::MatrixXd basis =
        Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() *
        Eigen::MatrixXd::Identity(T, d + 1);
    for (int t = 0; t < T; ++t) {
      const Eigen::Index row = Eigen::Index(std::size_t(i) * T + t);
      x.row(row) = basis.row(t).head(d);
      y[row] = basis(t, d);
    }
  }
  std::vector<std::uint8_t> missing(nt, 0);
  return PanelDataset(n, T, d, std::move(x), std::move(y), std::move(missing));
}

void criterion_leverage_totals() {
  const auto start = Clock::now();
  Rng rng(1001);
  bool pass = true;
  std::string detail;
  for (int trial = 0; trial < 50 && pass; ++trial) {
    const int n = 1 + int(rng.below(20));
    const int T = 1 + int(rng.below(10));
    const int d = 1 + int(rng.below(5));
    const double mask_rate = trial % 3 == 0 ? 0.2 : 0.0;
    const auto ds = random_panel(n, T, d, rng, mask_rate);
    if (ds.observed_pairs() == 0) continue;
    const auto s = olse_leverage(ds);
    // Gaussian rows are in general position: rank = min(#observed, d+1)
    const double expected =
        double(std::min<std::size_t>(ds.observed_pairs(), std::size_t(d) + 1));
    if (std::abs(s.total - expected) > 1e-9) {
      pass = false;
      detail = "total " + std::to_string(s.total) + " vs rank " +
               std::to_string(expected);
    }
    for (const double score : s.scores)
      if (score < 0.0 || score > 1.0) pass = false;
  }
  const double secs =
      std::chrono::duration<double>(Clock::now() - start).count();
  if (secs >= 5.0) {
    pass = false;
    detail += " runtime bound 5s exceeded";
  }
  if (pass) detail = "50 datasets, totals match numeric rank to 1e-9";
  report(1, "leverage totals", pass, secs, detail);
}

void criterion_sensitivity_dominance() {
  const auto start = Clock::now();
  Rng rng(2002);
  const double lambda = 0.2;
  bool pass = true;
  std::string detail;
  for (int trial = 0; trial < 20 && pass; ++trial) {
    const int n = 2 + int(rng.below(5));
    const int T = 2 + int(rng.below(4));
    const int d = 1 + int(rng.below(3));
    const int q = 1 + int(rng.below(2));
    const auto ds = random_panel(n, T, d, rng, trial % 4 == 0 ? 0.15 : 0.0);
    const auto s = glse_sensitivity(ds, lambda, q);
    for (int rep = 0; rep < 1000 && pass; ++rep) {
      const auto query = sample_query(d, q, lambda, rng);
      const double total = glse_total(ds, query);
      if (!(total > 0.0)) continue;
      for (int i = 0; i < n && pass; ++i)
        for (int t = 0; t < T; ++t) {
          if (glse_pair(ds, i, t, query) / total > s.at(i, t) + 1e-9) {
            pass = false;
            detail = "pair share exceeded sensitivity";
          }
        }
    }
    const auto sk = glsek_sensitivity(ds, lambda, q);
    for (int k = 1; k <= 3 && pass; ++k) {
      for (int rep = 0; rep < 333 && pass; ++rep) {
        GlseKQuery kq;
        for (int l = 0; l < k; ++l)
          kq.params.push_back(sample_query(d, q, lambda, rng));
        const double total = glsek_total(ds, kq);
        if (!(total > 0.0)) continue;
        for (int i = 0; i < n; ++i)
          if (glsek_individual(ds, i, kq) / total > sk.at(i) + 1e-9) {
            pass = false;
            detail = "individual share exceeded sensitivity";
          }
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(Clock::now() - start).count();
  if (secs >= 60.0) {
    pass = false;
    detail += " runtime bound 60s exceeded";
  }
  if (pass)
    detail = "20 instances x 1000 queries, pair and individual dominance";
  report(2, "sensitivity dominance", pass, secs, detail);
}

void criterion_lambda_inequalities() {
  const auto start = Clock::now();
  Rng rng(3003);
  const double lambda = 0.25;
  bool pass = true;
  std::size_t evaluations = 0;
  std::string detail;
  for (int trial = 0; trial < 5 && pass; ++trial) {
    const int n = 5;
    const int T = 16;
    const int d = 1 + int(rng.below(3));
    const int q = 1 + int(rng.below(3));
    const auto ds = random_panel(n, T, d, rng, 0.0);
    for (int rep = 0; rep < 250 && pass; ++rep) {
      const auto query = sample_query(d, q, lambda, rng);
      const double glse = glse_total(ds, query);
      const double olse = olse_total(ds, query.beta);
      if (glse < lambda * olse - 1e-9 * std::max(1.0, lambda * olse)) {
        pass = false;
        detail = "inequality (3) violated";
      }
      for (int i = 0; i < n; ++i)
        for (int t = 0; t < T; ++t) {
          double window = olse_pair(ds, i, t, query.beta);
          for (int j = 1; j <= std::min(t, q); ++j)
            window += olse_pair(ds, i, t - j, query.beta);
          if (glse_pair(ds, i, t, query) >
              2.0 * window + 1e-9 * std::max(1.0, window)) {
            pass = false;
            detail = "inequality (4) violated";
          }
          ++evaluations;
        }
    }
  }
  const double secs =
      std::chrono::duration<double>(Clock::now() - start).count();
  if (evaluations < 100000) {
    pass = false;
    detail = "only " + std::to_string(evaluations) + " evaluations";
  }
  if (secs >= 30.0) {
    pass = false;
    detail += " runtime bound 30s exceeded";
  }
  if (pass)
    detail = std::to_string(evaluations) + " pair-query evaluations, 1e-9 slack";
  report(3, "lambda inequalities", pass, secs, detail);
}

void criterion_matrix_form() {
  const auto start = Clock::now();
  Rng rng(4004);
  bool pass = true;
  std::string detail;
  for (int rep = 0; rep < 1000 && pass; ++rep) {
    const int q = 1 + int(rng.below(3));
    const int T = q + 1 + int(rng.below(10));
    const int d = 1 + int(rng.below(4));
    const auto ds = random_panel(1, T, d, rng, 0.0);
    const auto query = sample_query(d, q, 0.2, rng);
    Eigen::VectorXd residual(T);
    for (int t = 0; t < T; ++t)
      residual[t] = ds.y(0, t) - ds.x(0, t).dot(query.beta);
    const double via_matrix =
        (ar_whitening_matrix(query.rho, T) * residual).squaredNorm();
    const double via_pairs = glse_individual(ds, 0, query);
    if (std::abs(via_pairs - via_matrix) >
        1e-9 * std::max(1.0, std::abs(via_matrix))) {
      pass = false;
      detail = "per-pair sum diverged from the whitened norm";
    }
  }
  const double secs =
      std::chrono::duration<double>(Clock::now() - start).count();
  if (pass) detail = "1000 draws, q in {1,2,3}, 1e-9 relative";
  report(4, "matrix-form equivalence", pass, secs, detail);
}

void criterion_coreset_guarantee() {
  const auto start = Clock::now();
  GenConfig gen;
  gen.n_individuals = 100;
  gen.n_periods = 50;
  gen.n_features = 5;
  gen.q = 1;
  gen.lambda = 0.2;
  gen.seed = 505;
  const auto panel = synthetic_panel(gen);

  CoresetConfig base;
  base.lambda = gen.lambda;
  base.q = gen.q;
  base.size_override = 2000;

  Rng qrng(5005);
  std::vector<GlseQuery> queries;
  for (int n = 0; n < 100; ++n)
    queries.push_back(
        random_query(gen.n_features, gen.q, gen.lambda, qrng));
  std::vector<double> full_values;
  for (const auto& query : queries)
    full_values.push_back(glse_total(panel.data, query));

  int seeds_ok = 0;
  const int n_seeds = 20;
  for (std::uint64_t seed = 0; seed < n_seeds; ++seed) {
    CoresetConfig cfg = base;
    cfg.seed = seed;
    const auto cs = cglse(panel.data, cfg);
    double worst = 0.0;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      const double approx = coreset_glse_objective(cs, panel.data, queries[qi]);
      worst = std::max(worst, std::abs(approx / full_values[qi] - 1.0));
    }
    if (worst <= 0.3) ++seeds_ok;
  }

  // unbiasedness at a fixed query over many independent constructions
  const GlseQuery fixed = queries[0];
  const double full_at_fixed = full_values[0];
  double mean = 0.0;
  const int unbiased_seeds = 2000;
  for (std::uint64_t seed = 0; seed < unbiased_seeds; ++seed) {
    CoresetConfig cfg = base;
    cfg.seed = 10000 + seed;
    const auto cs = cglse(panel.data, cfg);
    mean += coreset_glse_objective(cs, panel.data, fixed);
  }
  mean /= double(unbiased_seeds);
  const double bias = std::abs(mean / full_at_fixed - 1.0);

  const bool pass_rate = seeds_ok >= 19;
  const bool pass_bias = bias <= 0.02;
  const double secs =
      std::chrono::duration<double>(Clock::now() - start).count();
  const bool pass = pass_rate && pass_bias && secs < 600.0;
  report(5, "coreset guarantee", pass, secs,
         "max err <= 0.3 in " + std::to_string(seeds_ok) + "/20 seeds, mean-psi bias " +
             std::to_string(bias));
}

void criterion_outlier_robustness() {
  const auto start = Clock::now();
  GenConfig gen;
  gen.n_individuals = 100;
  gen.n_periods = 50;
  gen.n_features = 5;
  gen.q = 1;
  gen.lambda = 0.2;
  gen.error_dist = ErrorDist::cauchy;
  gen.seed = 606;
  const auto panel = synthetic_panel(gen);

  Rng qrng(6006);
  std::vector<GlseQuery> queries;
  for (int n = 0; n < 50; ++n)
    queries.push_back(random_query(gen.n_features, gen.q, gen.lambda, qrng));
  std::vector<double> full_values;
  for (const auto& query : queries)
    full_values.push_back(glse_total(panel.data, query));

  const std::size_t size = 1500;
  int wins = 0;
  const int n_seeds = 20;
  for (std::uint64_t seed = 0; seed < n_seeds; ++seed) {
    CoresetConfig cfg;
    cfg.lambda = gen.lambda;
    cfg.q = gen.q;
    cfg.size_override = size;
    cfg.seed = seed;
    const auto ours = cglse(panel.data, cfg);
    const auto uni = uniform_coreset(panel.data, size, seed);

    std::vector<double> ours_err, uni_err;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      if (!(full_values[qi] > 0.0)) continue;
      ours_err.push_back(std::abs(
          coreset_glse_objective(ours, panel.data, queries[qi]) /
              full_values[qi] -
          1.0));
      uni_err.push_back(std::abs(
          coreset_glse_objective(uni, panel.data, queries[qi]) /
              full_values[qi] -
          1.0));
    }
    const auto ours_stats = summarize_errors(ours_err);
    const auto uni_stats = summarize_errors(uni_err);
    if (ours_stats.max_err < uni_stats.max_err &&
        ours_stats.rmse < uni_stats.rmse)
      ++wins;
  }
  const double secs =
      std::chrono::duration<double>(Clock::now() - start).count();
  const bool pass = wins >= 18;
  report(6, "outlier robustness", pass, secs,
         "CGLSE beats uniform on max err and RMSE in " +
             std::to_string(wins) + "/20 seeds");
}

void criterion_caratheodory() {
  const auto start = Clock::now();
  Rng rng(7007);
  bool pass = true;
  std::string detail;
  for (int trial = 0; trial < 20 && pass; ++trial) {
    const int d = 1 + int(rng.below(4));
    const int T = 10 + int(rng.below(91));
    const int n = 5 + int(rng.below(96));
    if (std::size_t(n) * std::size_t(T) > 10000) continue;
    const auto ds = random_panel(n, T, d, rng, trial % 5 == 0 ? 0.1 : 0.0);
    const auto cs = caratheodory_olse_coreset(ds);
    const std::size_t cap = std::size_t((d + 1) * (d + 1) + 1);
    if (cs.size() > cap) {
      pass = false;
      detail = "size cap exceeded";
    }
    for (int rep = 0; rep < 100 && pass; ++rep) {
      Eigen::VectorXd beta(d);
      for (int j = 0; j < d; ++j) beta[j] = rng.normal();
      const double exact = olse_total(ds, beta);
      double weighted = 0.0;
      for (const auto& e : cs.entries())
        weighted += e.weight * olse_pair(ds, e.i, e.t, beta);
      if (std::abs(weighted - exact) > 1e-8 * std::max(1.0, exact)) {
        pass = false;
        detail = "objective mismatch " + std::to_string(weighted) + " vs " +
                 std::to_string(exact);
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(Clock::now() - start).count();
  if (secs >= 60.0) {
    pass = false;
    detail += " runtime bound 60s exceeded";
  }
  if (pass) detail = "20 instances, 100 betas each, 1e-8 relative";
  report(7, "caratheodory exactness", pass, secs, detail);
}

void criterion_lower_bound() {
  const auto start = Clock::now();
  const int n = 10;
  const auto instance = lower_bound_instance(n);
  bool pass = true;
  std::string detail;
  for (int i = 0; i < n && pass; ++i) {
    const auto& cert = instance.certificates[std::size_t(i)];
    const double own = glsek_individual(instance.data, i, cert);
    const double total = glsek_total(instance.data, cert);
    if (!(own / total > 0.5)) {
      pass = false;
      detail = "share at certificate <= 1/2";
    }
    if (!(total < 1.25)) {
      pass = false;
      detail = "total objective >= 5/4";
    }
    // drop individual i from a weight-2 candidate coreset: the remaining
    // weighted objective must break the 0.5-approximation at zeta^(i)
    std::vector<CoresetEntry> entries;
    for (int j = 0; j < n; ++j)
      if (j != i) entries.push_back({j, 0, 2.0});
    const WeightedCoreset dropped(entries, {});
    const double approx =
        coreset_glsek_objective(dropped, instance.data, cert);
    if (!(approx < 0.5 * total)) {
      pass = false;
      detail = "dropping individual " + std::to_string(i + 1) +
               " did not violate the 0.5 guarantee";
    }
  }
  const double secs =
      std::chrono::duration<double>(Clock::now() - start).count();
  if (pass)
    detail = "N=10 shares > 1/2, totals < 5/4, each drop breaks 0.5-approx";
  report(8, "lower-bound certificate", pass, secs, detail);
}

void criterion_solver() {
  const auto start = Clock::now();
  Rng rng(9009);
  bool pass = true;
  std::string detail;

  // monotone trace and feasibility on random instances
  for (int trial = 0; trial < 50 && pass; ++trial) {
    const int n = 2 + int(rng.below(6));
    const int T = 3 + int(rng.below(10));
    const int d = 1 + int(rng.below(4));
    const auto ds = random_panel(n, T, d, rng, 0.0);
    SolverConfig cfg;
    cfg.lambda = 0.2;
    cfg.q = 1 + int(rng.below(2));
    cfg.max_iterations = 30;
    const FitResult fit = irls_glse_fit(ds, cfg);
    for (std::size_t j = 1; j < fit.trace.size(); ++j)
      if (fit.trace[j] > fit.trace[j - 1] + 1e-12) {
        pass = false;
        detail = "trace increased";
      }
    if (fit.rho.squaredNorm() > 1.0 - cfg.lambda + 1e-12) {
      pass = false;
      detail = "infeasible rho";
    }
  }

  // noiseless recovery
  for (std::uint64_t seed = 0; seed < 5 && pass; ++seed) {
    GenConfig gen;
    gen.n_individuals = 20;
    gen.n_periods = 15;
    gen.n_features = 4;
    gen.noise_scale = 0.0;
    gen.seed = 900 + seed;
    const auto panel = synthetic_panel(gen);
    SolverConfig cfg;
    cfg.lambda = gen.lambda;
    cfg.q = gen.q;
    const FitResult fit = irls_glse_fit(panel.data, cfg);
    if ((fit.beta - panel.beta).norm() > 1e-6) {
      pass = false;
      detail = "noiseless beta off by " +
               std::to_string((fit.beta - panel.beta).norm());
    }
  }

  // AR(1) consistency
  int rho_ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    GenConfig gen;
    gen.n_individuals = 50;
    gen.n_periods = 200;
    gen.n_features = 3;
    gen.q = 1;
    gen.seed = 9100 + seed;
    const auto panel = synthetic_panel(gen);
    SolverConfig cfg;
    cfg.lambda = gen.lambda;
    cfg.q = 1;
    const FitResult fit = irls_glse_fit(panel.data, cfg);
    if (std::abs(fit.rho[0] - panel.rho[0]) < 0.1) ++rho_ok;
  }
  if (rho_ok < 10) {
    pass = false;
    detail = "rho recovered in only " + std::to_string(rho_ok) + "/10 seeds";
  }

  const double secs =
      std::chrono::duration<double>(Clock::now() - start).count();
  if (pass)
    detail = "50 monotone traces, 5 noiseless recoveries, 10/10 rho fits";
  report(9, "solver sanity", pass, secs, detail);
}

void criterion_glsek_coreset() {
  const auto start = Clock::now();
  Rng rng(1010);
  const int n = 60, T = 8, d = 3, q = 1, k = 2;
  const double lambda = 0.2;
  const auto ds = identity_gram_panel(n, T, d, rng);
  const double measured_m = m_bound(ds);

  int within = 0, evaluated = 0;
  const int n_seeds = 10, n_queries = 100;
  for (std::uint64_t seed = 0; seed < n_seeds; ++seed) {
    CoresetConfig cfg;
    cfg.epsilon = 0.3;
    cfg.lambda = lambda;
    cfg.q = q;
    cfg.k = k;
    cfg.seed = seed;
    cfg.size_override = 220;        // stage-1 individual draws
    cfg.stage2_size_override = 60;  // per-individual pair draws
    const auto cs = cglse_k(ds, cfg);

    Rng qrng = Rng(777).substream(seed);
    for (int rep = 0; rep < n_queries; ++rep) {
      GlseKQuery kq;
      for (int l = 0; l < k; ++l)
        kq.params.push_back(sample_query(d, q, lambda, qrng));
      const double full = glsek_total(ds, kq);
      if (!(full > 0.0)) continue;
      const double approx = coreset_glsek_objective(cs, ds, kq);
      ++evaluated;
      if (std::abs(approx / full - 1.0) <= 0.3) ++within;
    }
  }
  const double rate = evaluated > 0 ? double(within) / double(evaluated) : 0.0;
  const double secs =
      std::chrono::duration<double>(Clock::now() - start).count();
  const bool pass = measured_m <= 10.0 && rate >= 0.95;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "M=%.3f, %d/%d k-queries within (1+-0.3)",
                measured_m, within, evaluated);
  report(10, "GLSE_k coreset", pass, secs, buf);
}

}  // namespace

int main() {
  std::printf("panelreg acceptance suite\n");
  criterion_leverage_totals();
  criterion_sensitivity_dominance();
  criterion_lambda_inequalities();
  criterion_matrix_form();
  criterion_coreset_guarantee();
  criterion_outlier_robustness();
  criterion_caratheodory();
  criterion_lower_bound();
  criterion_solver();
  criterion_glsek_coreset();
  if (failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", failures);
  return 1;
}
