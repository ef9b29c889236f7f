#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "panelreg/coresets.hpp"
#include "panelreg/dataset.hpp"
#include "panelreg/objectives.hpp"

namespace panelreg {

// |psi_S(zeta)/psi(zeta) - 1|. Throws DegenerateDataError when the full
// objective is zero.
double empirical_error(const PanelDataset& ds, const WeightedCoreset& coreset,
                       const GlseQuery& query);

struct MethodStats {
  double max_err = 0.0;
  double avg_err = 0.0;
  double std_err = 0.0;  // population convention, so rmse^2 = avg^2 + std^2
  double rmse = 0.0;
  std::size_t draws = 0;          // sampled pair count (coreset size column)
  double mean_entries = 0.0;      // distinct pairs after merging
  double t_construct = 0.0;       // T_C, seconds, mean over seeds
  double t_eval = 0.0;            // T_S, seconds, mean over seeds
  std::size_t excluded = 0;       // queries skipped for zero full objective
};

struct RawError {
  double epsilon;
  std::string method;
  std::uint64_t seed;
  int query;
  double error;
};

struct BenchRow {
  double epsilon = 0.0;
  bool has_cglse = false;
  bool has_uniform = false;
  MethodStats cglse;
  MethodStats uniform;
  double t_full = 0.0;  // T_X, seconds, measured once per run
};

struct BenchReport {
  std::string dataset;
  std::vector<std::uint64_t> seeds;
  std::size_t query_count = 0;
  std::vector<BenchRow> rows;
  std::vector<RawError> raw;  // populated when keep_raw is set
};

struct BenchOptions {
  std::vector<double> epsilons = {0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<std::uint64_t> seeds = {0};
  bool run_cglse = true;
  bool run_uniform = true;
  bool keep_raw = false;
  CoresetConfig base;  // lambda, q, delta, fl_constant, size overrides
  int threads = 1;
  std::string dataset_label;
};

// For each epsilon and seed: build the CGLSE coreset (epsilon substituted
// into the config), build a uniform coreset matched to the same number of
// sampled pairs, evaluate the shared queries on full data and on both
// coresets, and aggregate empirical errors. Timings come from a monotonic
// clock; everything else is deterministic given the seeds.
BenchReport run_benchmark(const PanelDataset& ds,
                          const std::vector<GlseQuery>& queries,
                          const BenchOptions& options);

enum class ReportFormat { json, csv, markdown };

void emit_report(const BenchReport& report, ReportFormat format,
                 const std::string& path);
BenchReport read_report_json(const std::string& path);

// aggregate helper shared with the acceptance suite; population std
MethodStats summarize_errors(const std::vector<double>& errors);

}  // namespace panelreg
