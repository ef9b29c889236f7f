#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "panelreg/dataset.hpp"
#include "panelreg/rng.hpp"

namespace testutil {

// (i, t, x..., y) tuples -> dataset; absent pairs become masked
struct Obs {
  int i;
  int t;
  std::vector<double> x;
  double y;
};

inline panelreg::PanelDataset dataset_from_rows(int n, int T, int d,
                                                const std::vector<Obs>& rows) {
  const std::size_t nt = std::size_t(n) * std::size_t(T);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(Eigen::Index(nt), d);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(Eigen::Index(nt));
  std::vector<std::uint8_t> missing(nt, 1);
  for (const auto& row : rows) {
    const std::size_t p = std::size_t(row.i) * std::size_t(T) + std::size_t(row.t);
    for (int j = 0; j < d; ++j) x(Eigen::Index(p), j) = row.x[std::size_t(j)];
    y[Eigen::Index(p)] = row.y;
    missing[p] = 0;
  }
  return panelreg::PanelDataset(n, T, d, std::move(x), std::move(y),
                                std::move(missing));
}

// fully observed random panel, entries N(0,1)
inline panelreg::PanelDataset random_dataset(int n, int T, int d,
                                             panelreg::Rng& rng) {
  const std::size_t nt = std::size_t(n) * std::size_t(T);
  Eigen::MatrixXd x(Eigen::Index(nt), d);
  Eigen::VectorXd y(static_cast<Eigen::Index>(nt));
  for (Eigen::Index r = 0; r < Eigen::Index(nt); ++r) {
    for (int j = 0; j < d; ++j) x(r, j) = rng.normal();
    y[r] = rng.normal();
  }
  std::vector<std::uint8_t> missing(nt, 0);
  return panelreg::PanelDataset(n, T, d, std::move(x), std::move(y),
                                std::move(missing));
}

inline std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "panelreg_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

inline std::string write_temp(const std::string& name,
                              const std::string& content) {
  const std::string path = temp_path(name);
  std::ofstream out(path);
  out << content;
  return path;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace testutil
