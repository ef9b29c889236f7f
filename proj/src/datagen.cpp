#include "panelreg/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "panelreg/errors.hpp"
#include "panelreg/rng.hpp"

namespace panelreg {

namespace {

constexpr std::uint64_t kMeanStream = 0x6d65616e;
constexpr std::uint64_t kObsStream = 0x6f627321;
constexpr std::uint64_t kBetaStream = 0x62657461;
constexpr std::uint64_t kRhoStream = 0x72686f21;
constexpr std::uint64_t kErrStream = 0x65727221;

void validate(const GenConfig& cfg) {
  if (cfg.n_individuals < 1 || cfg.n_periods < 1 || cfg.n_features < 1)
    throw ValidationError("N, T, d must be at least 1");
  if (cfg.q < 1) throw ValidationError("q must be >= 1");
  if (!(cfg.lambda > 0.0 && cfg.lambda < 1.0))
    throw ValidationError("lambda must lie in (0, 1)");
  if (cfg.fixed_intercept && cfg.n_features < 2)
    throw ValidationError("the fixed intercept coordinate requires d >= 2");
  if (!(cfg.noise_scale >= 0.0))
    throw ValidationError("noise_scale must be >= 0");
}

Eigen::VectorXd unit_sphere(int dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    for (int j = 0; j < dim; ++j) v[j] = rng.normal();
    norm = v.norm();
  }
  return v / norm;
}

Eigen::VectorXd draw_rho(int q, double lambda, Rng& rng) {
  const Eigen::VectorXd direction = unit_sphere(q, rng);
  const double length = rng.uniform(0.0, 1.0 - lambda);
  return length * direction;
}

}  // namespace

SyntheticPanel synthetic_panel(const GenConfig& cfg) {
  validate(cfg);
  const int n = cfg.n_individuals;
  const int T = cfg.n_periods;
  const int d = cfg.n_features;
  Rng root(cfg.seed);

  Rng beta_rng = root.substream(kBetaStream);
  Eigen::VectorXd beta(d);
  for (int j = 0; j < d; ++j) beta[j] = beta_rng.normal();

  Rng rho_rng = root.substream(kRhoStream);
  const Eigen::VectorXd rho = draw_rho(cfg.q, cfg.lambda, rho_rng);

  const std::size_t nt = std::size_t(n) * std::size_t(T);
  Eigen::MatrixXd x(Eigen::Index(nt), d);
  Eigen::VectorXd y(static_cast<Eigen::Index>(nt));
  std::vector<std::uint8_t> missing(nt, 0);

  for (int i = 0; i < n; ++i) {
    // per-individual substreams keep generation order-independent
    Rng mean_rng = root.substream(Rng::mix(kMeanStream, std::uint64_t(i)));
    Rng obs_rng = root.substream(Rng::mix(kObsStream, std::uint64_t(i)));
    Rng err_rng = root.substream(Rng::mix(kErrStream, std::uint64_t(i)));

    const Eigen::VectorXd direction = unit_sphere(d, mean_rng);
    const double tau = mean_rng.uniform(0.0, 5.0);
    const Eigen::VectorXd mean = tau * direction;
    const double sd = mean.norm();  // covariance |mean|^2 I

    std::vector<double> errors(std::size_t(T), 0.0);
    for (int t = 0; t < T; ++t) {
      const double innovation = cfg.error_dist == ErrorDist::gaussian
                                    ? err_rng.normal()
                                    : err_rng.cauchy(0.0, 2.0);
      double e = cfg.noise_scale * innovation;
      const int window = std::min(t, cfg.q);
      for (int a = 1; a <= window; ++a)
        e += rho[a - 1] * errors[std::size_t(t - a)];
      errors[std::size_t(t)] = e;

      const Eigen::Index row = Eigen::Index(std::size_t(i) * T + t);
      for (int j = 0; j < d; ++j) x(row, j) = mean[j] + sd * obs_rng.normal();
      if (cfg.fixed_intercept) x(row, d - 1) = 1.0;
      y[row] = x.row(row).dot(beta) + e;
    }
  }

  return SyntheticPanel{
      PanelDataset(n, T, d, std::move(x), std::move(y), std::move(missing)),
      std::move(beta), rho};
}

GlseQuery random_query(int d, int q, double lambda, Rng& rng) {
  if (d < 1 || q < 1) throw ValidationError("d and q must be >= 1");
  if (!(lambda > 0.0 && lambda < 1.0))
    throw ValidationError("lambda must lie in (0, 1)");
  GlseQuery query;
  query.beta.resize(d);
  for (int j = 0; j < d; ++j) query.beta[j] = rng.normal();
  query.rho = draw_rho(q, lambda, rng);
  return query;
}

GlseQuery random_query(int d, int q, double lambda, std::uint64_t seed) {
  Rng rng(seed);
  return random_query(d, q, lambda, rng);
}

GlseKQuery random_k_query(int d, int q, int k, double lambda, Rng& rng) {
  if (k < 1) throw ValidationError("k must be >= 1");
  GlseKQuery query;
  query.params.reserve(std::size_t(k));
  for (int l = 0; l < k; ++l)
    query.params.push_back(random_query(d, q, lambda, rng));
  return query;
}

LowerBoundInstance lower_bound_instance(int n_individuals) {
  if (n_individuals < 1 || n_individuals > 15)
    throw ValidationError(
        "N must lie in [1, 15] so the 16^|i-j| ratios stay in double range");
  const int n = n_individuals;
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double p = std::pow(4.0, double(i + 1));
    x(i, 0) = p;
    x(i, 1) = 1.0 / p;
  }
  std::vector<std::uint8_t> missing(std::size_t(n), 0);
  PanelDataset data(n, 1, 2, std::move(x), std::move(y), std::move(missing));

  LowerBoundInstance instance{std::move(data), {}};
  instance.certificates.reserve(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    const double p = std::pow(4.0, double(i + 1));
    GlseQuery first;
    first.beta = Eigen::Vector2d(1.0 / p, 0.0);
    first.rho = Eigen::VectorXd::Zero(1);
    GlseQuery second;
    second.beta = Eigen::Vector2d(0.0, p);
    second.rho = Eigen::VectorXd::Zero(1);
    instance.certificates.push_back(GlseKQuery({first, second}));
  }
  return instance;
}

void write_truth_sidecar(const SyntheticPanel& panel, const GenConfig& cfg,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  char buf[40];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "seed=" << cfg.seed << '\n';
  out << "error_dist="
      << (cfg.error_dist == ErrorDist::gaussian ? "gaussian" : "cauchy")
      << '\n';
  out << "lambda=" << fmt(cfg.lambda) << '\n';
  out << "q=" << cfg.q << '\n';
  out << "noise_scale=" << fmt(cfg.noise_scale) << '\n';
  out << "beta=";
  for (Eigen::Index j = 0; j < panel.beta.size(); ++j)
    out << (j ? "," : "") << fmt(panel.beta[j]);
  out << "\nrho=";
  for (Eigen::Index j = 0; j < panel.rho.size(); ++j)
    out << (j ? "," : "") << fmt(panel.rho[j]);
  out << '\n';
}

}  // namespace panelreg
