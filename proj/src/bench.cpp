#include "panelreg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "panelreg/errors.hpp"
#include "panelreg/sensitivity.hpp"
#include "parallel.hpp"

namespace panelreg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

double empirical_error(const PanelDataset& ds, const WeightedCoreset& coreset,
                       const GlseQuery& query) {
  const double full = glse_total(ds, query);
  if (!(full > 0.0))
    throw DegenerateDataError("full objective is zero at this query");
  return std::abs(coreset_glse_objective(coreset, ds, query) / full - 1.0);
}

MethodStats summarize_errors(const std::vector<double>& errors) {
  MethodStats stats;
  if (errors.empty()) return stats;
  double sum = 0.0, sum_sq = 0.0;
  for (const double e : errors) {
    stats.max_err = std::max(stats.max_err, e);
    sum += e;
    sum_sq += e * e;
  }
  const double n = double(errors.size());
  stats.avg_err = sum / n;
  const double mean_sq = sum_sq / n;
  // population convention keeps rmse^2 = avg^2 + std^2 exact
  stats.std_err =
      std::sqrt(std::max(0.0, mean_sq - stats.avg_err * stats.avg_err));
  stats.rmse = std::sqrt(mean_sq);
  return stats;
}

BenchReport run_benchmark(const PanelDataset& ds,
                          const std::vector<GlseQuery>& queries,
                          const BenchOptions& options) {
  if (queries.empty()) throw ValidationError("benchmark needs queries");
  if (options.epsilons.empty()) throw ValidationError("benchmark needs epsilons");
  if (options.seeds.empty()) throw ValidationError("benchmark needs seeds");

  BenchReport report;
  report.dataset = options.dataset_label;
  report.seeds = options.seeds;
  report.query_count = queries.size();

  // full-data objectives, shared by every row; T_X measured here
  std::vector<double> full_values(queries.size());
  const auto t_full_start = Clock::now();
  detail::parallel_for(queries.size(), options.threads, [&](std::size_t qi) {
    full_values[qi] = glse_total(ds, queries[qi]);
  });
  const double t_full = seconds_since(t_full_start);

  for (const double epsilon : options.epsilons) {
    BenchRow row;
    row.epsilon = epsilon;
    row.t_full = t_full;

    struct Accum {
      std::vector<double> errors;
      std::size_t draws = 0;
      double entries = 0.0;
      double t_construct = 0.0;
      double t_eval = 0.0;
      std::size_t excluded = 0;
    };
    Accum cglse_acc, uniform_acc;

    auto evaluate = [&](const WeightedCoreset& coreset, Accum& acc,
                        std::uint64_t seed) {
      const auto t0 = Clock::now();
      std::vector<double> values(queries.size());
      detail::parallel_for(queries.size(), options.threads, [&](std::size_t qi) {
        values[qi] = coreset_glse_objective(coreset, ds, queries[qi]);
      });
      acc.t_eval += seconds_since(t0);
      for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        if (!(full_values[qi] > 0.0)) {
          ++acc.excluded;
          continue;
        }
        const double err = std::abs(values[qi] / full_values[qi] - 1.0);
        acc.errors.push_back(err);
        if (options.keep_raw)
          report.raw.push_back({epsilon,
                                &acc == &cglse_acc ? "cglse" : "uniform", seed,
                                int(qi), err});
      }
    };

    for (const std::uint64_t seed : options.seeds) {
      CoresetConfig cfg = options.base;
      cfg.epsilon = epsilon;
      cfg.seed = seed;
      cfg.threads = options.threads;

      std::size_t matched_size = 0;
      if (options.run_cglse) {
        const auto t0 = Clock::now();
        const WeightedCoreset coreset = cglse(ds, cfg);
        cglse_acc.t_construct += seconds_since(t0);
        cglse_acc.draws = coreset.meta().draws;
        cglse_acc.entries += double(coreset.size());
        matched_size = coreset.meta().draws;
        evaluate(coreset, cglse_acc, seed);
      }
      if (options.run_uniform) {
        // matched pair budget: same number of sampled pairs as CGLSE
        std::size_t m = matched_size;
        if (m == 0)
          m = cfg.size_override.value_or(
              fl_sample_size(cfg,
                             glse_sensitivity(ds, cfg.lambda, cfg.q).total,
                             glse_pseudo_dimension(cfg.q, ds.n_features())));
        m = std::min(m, ds.observed_pairs());
        const auto t0 = Clock::now();
        const WeightedCoreset coreset = uniform_coreset(ds, m, seed);
        uniform_acc.t_construct += seconds_since(t0);
        uniform_acc.draws = m;
        uniform_acc.entries += double(coreset.size());
        evaluate(coreset, uniform_acc, seed);
      }
    }

    const double n_seeds = double(options.seeds.size());
    auto finalize = [&](Accum& acc) {
      MethodStats stats = summarize_errors(acc.errors);
      stats.draws = acc.draws;
      stats.mean_entries = acc.entries / n_seeds;
      stats.t_construct = acc.t_construct / n_seeds;
      stats.t_eval = acc.t_eval / n_seeds;
      stats.excluded = acc.excluded;
      return stats;
    };
    if (options.run_cglse) {
      row.has_cglse = true;
      row.cglse = finalize(cglse_acc);
    }
    if (options.run_uniform) {
      row.has_uniform = true;
      row.uniform = finalize(uniform_acc);
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

nlohmann::json stats_to_json(const MethodStats& s) {
  return {{"max_err", s.max_err},       {"avg_err", s.avg_err},
          {"std_err", s.std_err},       {"rmse", s.rmse},
          {"draws", s.draws},           {"mean_entries", s.mean_entries},
          {"t_construct", s.t_construct}, {"t_eval", s.t_eval},
          {"excluded", s.excluded}};
}

MethodStats stats_from_json(const nlohmann::json& j) {
  MethodStats s;
  s.max_err = j.at("max_err").get<double>();
  s.avg_err = j.at("avg_err").get<double>();
  s.std_err = j.at("std_err").get<double>();
  s.rmse = j.at("rmse").get<double>();
  s.draws = j.at("draws").get<std::size_t>();
  s.mean_entries = j.at("mean_entries").get<double>();
  s.t_construct = j.at("t_construct").get<double>();
  s.t_eval = j.at("t_eval").get<double>();
  s.excluded = j.at("excluded").get<std::size_t>();
  return s;
}

void emit_json(const BenchReport& report, std::ostream& out) {
  nlohmann::json j;
  j["dataset"] = report.dataset;
  j["seeds"] = report.seeds;
  j["query_count"] = report.query_count;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json r;
    r["epsilon"] = row.epsilon;
    r["t_full"] = row.t_full;
    if (row.has_cglse) r["cglse"] = stats_to_json(row.cglse);
    if (row.has_uniform) r["uniform"] = stats_to_json(row.uniform);
    j["rows"].push_back(std::move(r));
  }
  if (!report.raw.empty()) {
    j["raw"] = nlohmann::json::array();
    for (const auto& e : report.raw)
      j["raw"].push_back({{"epsilon", e.epsilon},
                          {"method", e.method},
                          {"seed", e.seed},
                          {"query", e.query},
                          {"error", e.error}});
  }
  out << j.dump(2) << '\n';
}

void emit_csv(const BenchReport& report, std::ostream& out) {
  out << "dataset,epsilon,method,max_err,avg_err,std_err,rmse,size,"
         "mean_entries,t_construct,t_eval,t_full,excluded\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const auto& row : report.rows) {
    auto line = [&](const char* method, const MethodStats& s) {
      out << report.dataset << ',' << fmt(row.epsilon) << ',' << method << ','
          << fmt(s.max_err) << ',' << fmt(s.avg_err) << ',' << fmt(s.std_err)
          << ',' << fmt(s.rmse) << ',' << s.draws << ',' << fmt(s.mean_entries)
          << ',' << fmt(s.t_construct) << ',' << fmt(s.t_eval) << ','
          << fmt(row.t_full) << ',' << s.excluded << '\n';
    };
    if (row.has_cglse) line("cglse", row.cglse);
    if (row.has_uniform) line("uniform", row.uniform);
  }
}

void emit_markdown(const BenchReport& report, std::ostream& out) {
  out << "| eps | max err CGLSE | max err Uni | avg/std/RMSE CGLSE | "
         "avg/std/RMSE Uni | size | T_C | T_C+T_S | T_X |\n";
  out << "|-----|---------------|-------------|--------------------|"
         "------------------|------|-----|---------|-----|\n";
  char buf[128];
  for (const auto& row : report.rows) {
    auto triple = [&](const MethodStats& s) {
      std::snprintf(buf, sizeof(buf), "%.3f/%.3f/%.3f", s.avg_err, s.std_err,
                    s.rmse);
      return std::string(buf);
    };
    auto short3 = [&](double v) {
      std::snprintf(buf, sizeof(buf), "%.3f", v);
      return std::string(buf);
    };
    out << "| " << short3(row.epsilon) << " | "
        << (row.has_cglse ? short3(row.cglse.max_err) : "-") << " | "
        << (row.has_uniform ? short3(row.uniform.max_err) : "-") << " | "
        << (row.has_cglse ? triple(row.cglse) : "-") << " | "
        << (row.has_uniform ? triple(row.uniform) : "-") << " | "
        << (row.has_cglse ? row.cglse.draws : row.uniform.draws) << " | "
        << (row.has_cglse ? short3(row.cglse.t_construct) : "-") << " | "
        << (row.has_cglse ? short3(row.cglse.t_construct + row.cglse.t_eval)
                          : "-")
        << " | " << short3(row.t_full) << " |\n";
  }
}

}  // namespace

void emit_report(const BenchReport& report, ReportFormat format,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  switch (format) {
    case ReportFormat::json:
      emit_json(report, out);
      break;
    case ReportFormat::csv:
      emit_csv(report, out);
      break;
    case ReportFormat::markdown:
      emit_markdown(report, out);
      break;
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

BenchReport read_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  BenchReport report;
  report.dataset = j.at("dataset").get<std::string>();
  report.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  report.query_count = j.at("query_count").get<std::size_t>();
  for (const auto& r : j.at("rows")) {
    BenchRow row;
    row.epsilon = r.at("epsilon").get<double>();
    row.t_full = r.at("t_full").get<double>();
    if (r.contains("cglse")) {
      row.has_cglse = true;
      row.cglse = stats_from_json(r.at("cglse"));
    }
    if (r.contains("uniform")) {
      row.has_uniform = true;
      row.uniform = stats_from_json(r.at("uniform"));
    }
    report.rows.push_back(std::move(row));
  }
  if (j.contains("raw")) {
    for (const auto& e : j.at("raw"))
      report.raw.push_back({e.at("epsilon").get<double>(),
                            e.at("method").get<std::string>(),
                            e.at("seed").get<std::uint64_t>(),
                            e.at("query").get<int>(),
                            e.at("error").get<double>()});
  }
  return report;
}

}  // namespace panelreg
