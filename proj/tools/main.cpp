#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "panelreg/bench.hpp"
#include "panelreg/coresets.hpp"
#include "panelreg/datagen.hpp"
#include "panelreg/errors.hpp"
#include "panelreg/rng.hpp"
#include "panelreg/sensitivity.hpp"
#include "panelreg/solver.hpp"

using namespace panelreg;

namespace {

int default_threads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : int(n);
}

struct GenArgs {
  int n = 500, T = 500, d = 10, q = 1;
  double lambda = 0.2;
  std::string dist = "gaussian";
  double noise_scale = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen(const GenArgs& args) {
  GenConfig cfg;
  cfg.n_individuals = args.n;
  cfg.n_periods = args.T;
  cfg.n_features = args.d;
  cfg.q = args.q;
  cfg.lambda = args.lambda;
  cfg.seed = args.seed;
  cfg.noise_scale = args.noise_scale;
  if (args.dist == "gaussian")
    cfg.error_dist = ErrorDist::gaussian;
  else if (args.dist == "cauchy")
    cfg.error_dist = ErrorDist::cauchy;
  else
    throw ValidationError("--dist must be gaussian or cauchy");

  const SyntheticPanel panel = synthetic_panel(cfg);
  write_csv(panel.data, args.out);
  write_truth_sidecar(panel, cfg, args.out + ".truth.txt");
  std::cout << "wrote " << args.out << " (" << panel.data.observed_pairs()
            << " pairs) and " << args.out << ".truth.txt\n";
  return 0;
}

struct CoresetArgs {
  std::string in;
  std::string method = "cglse";
  double epsilon = 0.1, delta = 0.1, lambda = 0.2;
  int q = 1, k = 1;
  double fl_constant = 1.0;
  std::optional<std::size_t> size;
  std::optional<std::size_t> stage2_size;
  std::uint64_t seed = 0;
  int threads = default_threads();
  std::string out;
};

int run_coreset(const CoresetArgs& args, bool k_given, bool eps_given,
                bool stage2_given) {
  if (k_given && args.method != "cglse-k")
    throw ValidationError("--k applies only to --method cglse-k");
  if (stage2_given && args.method != "cglse-k")
    throw ValidationError("--stage2-size applies only to --method cglse-k");
  if (eps_given && (args.method == "uniform" || args.method == "caratheodory"))
    throw ValidationError("--epsilon does not apply to --method " +
                          args.method);
  if (args.method == "uniform" && !args.size)
    throw ValidationError("--method uniform requires --size");

  const PanelDataset ds = load_csv(args.in);
  CoresetConfig cfg;
  cfg.epsilon = args.epsilon;
  cfg.delta = args.delta;
  cfg.lambda = args.lambda;
  cfg.q = args.q;
  cfg.k = args.k;
  cfg.fl_constant = args.fl_constant;
  cfg.size_override = args.size;
  cfg.stage2_size_override = args.stage2_size;
  cfg.seed = args.seed;
  cfg.threads = args.threads;

  WeightedCoreset coreset;
  if (args.method == "cglse")
    coreset = cglse(ds, cfg);
  else if (args.method == "cglse-k")
    coreset = cglse_k(ds, cfg);
  else if (args.method == "uniform")
    coreset = uniform_coreset(ds, *args.size, args.seed);
  else if (args.method == "caratheodory")
    coreset = caratheodory_olse_coreset(ds);
  else
    throw ValidationError("unknown method '" + args.method + "'");

  write_coreset_csv(coreset, args.out);
  std::cout << "method=" << coreset.meta().method
            << " draws=" << coreset.meta().draws
            << " total_sensitivity=" << coreset.meta().total_sensitivity
            << " pairs=" << coreset.size() << '\n';
  return 0;
}

struct EvalArgs {
  std::string in;
  std::string coreset;
  int queries = 100;
  double lambda = 0.2;
  int q = 1, k = 1;
  std::uint64_t seed = 0;
  std::string out;
};

int run_eval(const EvalArgs& args) {
  if (args.queries < 1) throw ValidationError("--queries must be >= 1");
  const PanelDataset ds = load_csv(args.in);
  const WeightedCoreset coreset = read_coreset_csv(args.coreset);

  Rng rng(args.seed);
  std::vector<double> errors;
  std::size_t excluded = 0;
  std::vector<std::pair<int, double>> rows;
  for (int n = 0; n < args.queries; ++n) {
    double full = 0.0, approx = 0.0;
    if (args.k <= 1) {
      const GlseQuery query =
          random_query(ds.n_features(), args.q, args.lambda, rng);
      full = glse_total(ds, query);
      approx = coreset_glse_objective(coreset, ds, query);
    } else {
      const GlseKQuery query =
          random_k_query(ds.n_features(), args.q, args.k, args.lambda, rng);
      full = glsek_total(ds, query);
      approx = coreset_glsek_objective(coreset, ds, query);
    }
    if (!(full > 0.0)) {
      ++excluded;
      continue;
    }
    const double err = std::abs(approx / full - 1.0);
    errors.push_back(err);
    rows.emplace_back(n, err);
  }

  const MethodStats stats = summarize_errors(errors);
  std::cout << "queries=" << args.queries << " excluded=" << excluded
            << " max=" << stats.max_err << " avg=" << stats.avg_err
            << " std=" << stats.std_err << " rmse=" << stats.rmse << '\n';
  if (!args.out.empty()) {
    std::ofstream file(args.out);
    if (!file) throw std::runtime_error("cannot write '" + args.out + "'");
    file << "query,empirical_error\n";
    char buf[40];
    for (const auto& [n, err] : rows) {
      std::snprintf(buf, sizeof(buf), "%.17g", err);
      file << n << ',' << buf << '\n';
    }
  }
  return 0;
}

struct SolveArgs {
  std::string in;
  std::string coreset;
  double lambda = 0.2;
  int q = 1;
  int max_iterations = 50;
  double tolerance = 1e-8;
  std::string out;
};

int run_solve(const SolveArgs& args) {
  const PanelDataset ds = load_csv(args.in);
  SolverConfig cfg;
  cfg.lambda = args.lambda;
  cfg.q = args.q;
  cfg.max_iterations = args.max_iterations;
  cfg.tolerance = args.tolerance;

  FitResult fit;
  if (args.coreset.empty()) {
    fit = irls_glse_fit(ds, cfg);
  } else {
    const WeightedCoreset coreset = read_coreset_csv(args.coreset);
    fit = irls_glse_fit(ds, coreset, cfg);
    // full-data objective at the coreset fit, for the T_S vs T_X comparison
    std::cout << "full_objective_at_fit=" << evaluate_fit(ds, fit) << '\n';
  }
  std::cout << fit_report(fit);
  if (!args.out.empty()) write_fit_report(fit, args.out);
  return 0;
}

struct BenchArgs {
  std::string in;
  std::vector<double> epsilons = {0.1, 0.2, 0.3, 0.4, 0.5};
  int queries = 100;
  std::vector<std::uint64_t> seeds = {0};
  std::string methods = "cglse,uniform";
  bool raw = false;
  std::string format = "json";
  double lambda = 0.2, delta = 0.1, fl_constant = 1.0;
  int q = 1;
  std::optional<std::size_t> size;
  std::uint64_t query_seed = 1;
  int threads = default_threads();
  std::string out;
};

int run_bench(const BenchArgs& args) {
  if (args.queries < 1) throw ValidationError("--queries must be >= 1");
  const PanelDataset ds = load_csv(args.in);

  BenchOptions opt;
  opt.epsilons = args.epsilons;
  opt.seeds = args.seeds;
  opt.keep_raw = args.raw;
  opt.threads = args.threads;
  opt.dataset_label = args.in;
  opt.base.lambda = args.lambda;
  opt.base.delta = args.delta;
  opt.base.q = args.q;
  opt.base.fl_constant = args.fl_constant;
  opt.base.size_override = args.size;
  opt.run_cglse = args.methods.find("cglse") != std::string::npos;
  opt.run_uniform = args.methods.find("uniform") != std::string::npos;
  if (!opt.run_cglse && !opt.run_uniform)
    throw ValidationError("--methods must name cglse and/or uniform");

  Rng qrng(args.query_seed);
  std::vector<GlseQuery> queries;
  queries.reserve(std::size_t(args.queries));
  for (int n = 0; n < args.queries; ++n)
    queries.push_back(random_query(ds.n_features(), args.q, args.lambda, qrng));

  const BenchReport report = run_benchmark(ds, queries, opt);

  ReportFormat format;
  if (args.format == "json")
    format = ReportFormat::json;
  else if (args.format == "csv")
    format = ReportFormat::csv;
  else if (args.format == "markdown")
    format = ReportFormat::markdown;
  else
    throw ValidationError("--format must be json, csv, or markdown");
  emit_report(report, format, args.out);
  std::cout << "wrote " << args.out << '\n';
  return 0;
}

struct LowerBoundArgs {
  int n = 10;
  std::string out;
};

int run_lowerbound(const LowerBoundArgs& args) {
  const LowerBoundInstance instance = lower_bound_instance(args.n);
  bool all_pass = true;
  for (int i = 0; i < args.n; ++i) {
    const auto& cert = instance.certificates[std::size_t(i)];
    const double own = glsek_individual(instance.data, i, cert);
    const double total = glsek_total(instance.data, cert);
    const double share = own / total;
    const bool ok = share > 0.5 && total < 1.25;
    all_pass = all_pass && ok;
    std::printf("i=%d own=%.12g total=%.12g share=%.12g %s\n", i + 1, own,
                total, share, ok ? "ok" : "VIOLATION");
  }
  std::cout << (all_pass ? "all certificates hold\n"
                         : "certificate violation\n");
  if (!args.out.empty()) write_csv(instance.data, args.out);
  return all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "panelreg: coreset construction, evaluation, and GLSE solving for "
      "panel-data regression"};
  app.require_subcommand(1);

  // global defaults; subcommand flags override them
  std::uint64_t global_seed = 0;
  int global_threads = default_threads();
  std::string global_output;
  auto* gseed = app.add_option("--seed", global_seed,
                               "default RNG seed for all subcommands");
  auto* gthreads =
      app.add_option("--threads", global_threads, "default worker threads");
  auto* goutput =
      app.add_option("--output", global_output, "default output path");

  GenArgs gen_args;
  auto* gen_cmd = app.add_subcommand(
      "gen", "Generate a synthetic panel dataset with AR(q) errors");
  gen_cmd->add_option("--N", gen_args.n, "individuals")->capture_default_str();
  gen_cmd->add_option("--T", gen_args.T, "time periods")->capture_default_str();
  gen_cmd->add_option("--d", gen_args.d, "features")->capture_default_str();
  gen_cmd->add_option("--q", gen_args.q, "autocorrelation order")
      ->capture_default_str();
  gen_cmd->add_option("--lambda", gen_args.lambda, "stationarity margin")
      ->capture_default_str();
  gen_cmd->add_option("--dist", gen_args.dist, "gaussian or cauchy")
      ->capture_default_str();
  gen_cmd->add_option("--noise-scale", gen_args.noise_scale,
                      "innovation multiplier")
      ->capture_default_str();
  auto* gen_seed_opt = gen_cmd->add_option("--seed", gen_args.seed, "RNG seed")
                           ->capture_default_str();
  auto* gen_out_opt = gen_cmd->add_option("--out", gen_args.out,
                                          "output CSV path");

  CoresetArgs coreset_args;
  auto* coreset_cmd =
      app.add_subcommand("coreset", "Construct a coreset from a dataset");
  coreset_cmd->add_option("--in", coreset_args.in, "input dataset CSV")
      ->required();
  coreset_cmd
      ->add_option("--method", coreset_args.method,
                   "cglse, cglse-k, uniform, or caratheodory")
      ->capture_default_str();
  auto* eps_opt = coreset_cmd
                      ->add_option("--epsilon", coreset_args.epsilon,
                                   "target relative error")
                      ->capture_default_str();
  coreset_cmd->add_option("--delta", coreset_args.delta, "failure probability")
      ->capture_default_str();
  coreset_cmd->add_option("--lambda", coreset_args.lambda,
                          "stationarity margin")
      ->capture_default_str();
  coreset_cmd->add_option("--q", coreset_args.q, "autocorrelation order")
      ->capture_default_str();
  auto* k_opt = coreset_cmd->add_option("--k", coreset_args.k,
                                        "clusters (cglse-k only)")
                    ->capture_default_str();
  coreset_cmd->add_option("--fl-constant", coreset_args.fl_constant,
                          "sample-size formula constant")
      ->capture_default_str();
  coreset_cmd->add_option("--size", coreset_args.size,
                          "explicit sample count (overrides the formula)");
  auto* stage2_opt = coreset_cmd->add_option(
      "--stage2-size", coreset_args.stage2_size,
      "per-individual sample count (cglse-k only)");
  auto* coreset_seed_opt =
      coreset_cmd->add_option("--seed", coreset_args.seed, "RNG seed")
          ->capture_default_str();
  auto* coreset_threads_opt =
      coreset_cmd->add_option("--threads", coreset_args.threads,
                              "worker threads")
          ->capture_default_str();
  auto* coreset_out_opt =
      coreset_cmd->add_option("--out", coreset_args.out, "output coreset CSV");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand(
      "eval", "Evaluate a coreset against the full objective on random "
              "queries");
  eval_cmd->add_option("--in", eval_args.in, "input dataset CSV")->required();
  eval_cmd->add_option("--coreset", eval_args.coreset, "coreset CSV")
      ->required();
  eval_cmd->add_option("--queries", eval_args.queries, "number of queries")
      ->capture_default_str();
  eval_cmd->add_option("--lambda", eval_args.lambda, "stationarity margin")
      ->capture_default_str();
  eval_cmd->add_option("--q", eval_args.q, "autocorrelation order")
      ->capture_default_str();
  eval_cmd->add_option("--k", eval_args.k, "evaluate GLSE_k when k > 1")
      ->capture_default_str();
  auto* eval_seed_opt =
      eval_cmd->add_option("--seed", eval_args.seed, "query RNG seed")
          ->capture_default_str();
  auto* eval_out_opt =
      eval_cmd->add_option("--out", eval_args.out, "per-query error CSV");

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand(
      "solve", "Fit GLSE parameters via alternating least squares");
  solve_cmd->add_option("--in", solve_args.in, "input dataset CSV")
      ->required();
  solve_cmd->add_option("--coreset", solve_args.coreset,
                        "fit on this coreset instead of the full data");
  solve_cmd->add_option("--lambda", solve_args.lambda, "stationarity margin")
      ->capture_default_str();
  solve_cmd->add_option("--q", solve_args.q, "autocorrelation order")
      ->capture_default_str();
  solve_cmd
      ->add_option("--max-iters", solve_args.max_iterations,
                   "iteration limit")
      ->capture_default_str();
  solve_cmd->add_option("--tol", solve_args.tolerance,
                        "relative improvement threshold")
      ->capture_default_str();
  auto* solve_out_opt =
      solve_cmd->add_option("--out", solve_args.out, "fit report path");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand(
      "bench", "Empirical-error benchmark of CGLSE against uniform sampling");
  bench_cmd->add_option("--in", bench_args.in, "input dataset CSV")
      ->required();
  bench_cmd
      ->add_option("--epsilons", bench_args.epsilons,
                   "comma-separated error targets")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--queries", bench_args.queries, "queries per run")
      ->capture_default_str();
  bench_cmd->add_option("--seeds", bench_args.seeds, "comma-separated seeds")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--methods", bench_args.methods, "cglse,uniform")
      ->capture_default_str();
  bench_cmd->add_flag("--raw", bench_args.raw, "keep per-query errors");
  bench_cmd->add_option("--format", bench_args.format,
                        "json, csv, or markdown")
      ->capture_default_str();
  bench_cmd->add_option("--lambda", bench_args.lambda, "stationarity margin")
      ->capture_default_str();
  bench_cmd->add_option("--delta", bench_args.delta, "failure probability")
      ->capture_default_str();
  bench_cmd->add_option("--q", bench_args.q, "autocorrelation order")
      ->capture_default_str();
  bench_cmd->add_option("--fl-constant", bench_args.fl_constant,
                        "sample-size formula constant")
      ->capture_default_str();
  bench_cmd->add_option("--size", bench_args.size,
                        "explicit coreset size per epsilon");
  auto* bench_qseed_opt =
      bench_cmd->add_option("--query-seed", bench_args.query_seed,
                            "seed for the shared query draw")
          ->capture_default_str();
  auto* bench_threads_opt =
      bench_cmd->add_option("--threads", bench_args.threads, "worker threads")
          ->capture_default_str();
  auto* bench_out_opt =
      bench_cmd->add_option("--out", bench_args.out, "report path");

  LowerBoundArgs lb_args;
  auto* lb_cmd = app.add_subcommand(
      "lowerbound",
      "Generate the adversarial GLSE_k instance and check its certificates");
  lb_cmd->add_option("--N", lb_args.n, "individuals (at most 15)")
      ->capture_default_str();
  auto* lb_out_opt = lb_cmd->add_option("--out", lb_args.out,
                                        "dataset CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    app.exit(e);
    return 1;
  }

  // fold the global defaults into subcommand values they did not set
  if (gseed->count() > 0) {
    if (gen_seed_opt->count() == 0) gen_args.seed = global_seed;
    if (coreset_seed_opt->count() == 0) coreset_args.seed = global_seed;
    if (eval_seed_opt->count() == 0) eval_args.seed = global_seed;
    if (bench_qseed_opt->count() == 0) bench_args.query_seed = global_seed;
  }
  if (gthreads->count() > 0) {
    if (coreset_threads_opt->count() == 0) coreset_args.threads = global_threads;
    if (bench_threads_opt->count() == 0) bench_args.threads = global_threads;
  }
  if (goutput->count() > 0) {
    if (gen_out_opt->count() == 0) gen_args.out = global_output;
    if (coreset_out_opt->count() == 0) coreset_args.out = global_output;
    if (eval_out_opt->count() == 0) eval_args.out = global_output;
    if (solve_out_opt->count() == 0) solve_args.out = global_output;
    if (bench_out_opt->count() == 0) bench_args.out = global_output;
    if (lb_out_opt->count() == 0) lb_args.out = global_output;
  }

  try {
    if (gen_cmd->parsed() && gen_args.out.empty())
      throw ValidationError("gen requires --out (or global --output)");
    if (coreset_cmd->parsed() && coreset_args.out.empty())
      throw ValidationError("coreset requires --out (or global --output)");
    if (bench_cmd->parsed() && bench_args.out.empty())
      throw ValidationError("bench requires --out (or global --output)");
    if (gen_cmd->parsed()) return run_gen(gen_args);
    if (coreset_cmd->parsed())
      return run_coreset(coreset_args, k_opt->count() > 0,
                         eps_opt->count() > 0, stage2_opt->count() > 0);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (solve_cmd->parsed()) return run_solve(solve_args);
    if (bench_cmd->parsed()) return run_bench(bench_args);
    if (lb_cmd->parsed()) return run_lowerbound(lb_args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
