#include "panelreg/dataset.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cfloat>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "panelreg/errors.hpp"

namespace panelreg {

namespace {

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? std::string()
                                            : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, int line) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ParseError("cannot parse number '" + s + "'", line);
  return value;
}

long parse_int(const std::string& s, int line) {
  long value = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ParseError("cannot parse integer '" + s + "'", line);
  return value;
}

}  // namespace

PanelDataset::PanelDataset(int n_individuals, int n_periods, int n_features,
                           Eigen::MatrixXd x, Eigen::VectorXd y,
                           std::vector<std::uint8_t> missing)
    : n_(n_individuals),
      t_(n_periods),
      d_(n_features),
      x_(std::move(x)),
      y_(std::move(y)),
      missing_(std::move(missing)) {
  if (n_ < 1 || t_ < 1 || d_ < 1)
    throw ValidationError("dataset dimensions must be at least 1");
  const auto nt = n_pairs();
  if (std::size_t(x_.rows()) != nt || x_.cols() != d_ ||
      std::size_t(y_.size()) != nt || missing_.size() != nt)
    throw ValidationError("dataset shape mismatch");
  if (!x_.allFinite() || !y_.allFinite())
    throw ValidationError("dataset contains non-finite values");
  observed_ = 0;
  for (std::size_t p = 0; p < nt; ++p) {
    if (missing_[p]) {
      if (x_.row(Eigen::Index(p)).squaredNorm() != 0.0 ||
          y_[Eigen::Index(p)] != 0.0)
        throw ValidationError("masked pair must be stored as (0, 0)");
    } else {
      ++observed_;
    }
  }
  std::uint64_t h = 0xcbf29ce484222325ull;
  const int dims[3] = {n_, t_, d_};
  h = fnv1a(dims, sizeof(dims), h);
  h = fnv1a(x_.data(), sizeof(double) * nt * std::size_t(d_), h);
  h = fnv1a(y_.data(), sizeof(double) * nt, h);
  h = fnv1a(missing_.data(), missing_.size(), h);
  fingerprint_ = h;
}

Eigen::MatrixXd PanelDataset::individual_design(int i) const {
  Eigen::MatrixXd z(t_, d_ + 1);
  z.leftCols(d_) = x_.middleRows(Eigen::Index(pair_index(i, 0)), t_);
  z.col(d_) = y_.segment(Eigen::Index(pair_index(i, 0)), t_);
  return z;
}

PanelDataset PanelDataset::individual_slice(int i) const {
  const auto base = pair_index(i, 0);
  Eigen::MatrixXd x = x_.middleRows(Eigen::Index(base), t_);
  Eigen::VectorXd y = y_.segment(Eigen::Index(base), t_);
  std::vector<std::uint8_t> missing(missing_.begin() + long(base),
                                    missing_.begin() + long(base) + t_);
  return PanelDataset(1, t_, d_, std::move(x), std::move(y),
                      std::move(missing));
}

PanelDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");

  std::string line;
  int line_no = 0;

  // header: individual,time,x_1,...,x_d,y
  if (!std::getline(in, line))
    throw ParseError("empty file", 1);
  ++line_no;
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "individual" || header[1] != "time" ||
      header.back() != "y")
    throw ParseError("expected header individual,time,x_1,...,x_d,y", line_no);
  const int d = static_cast<int>(header.size()) - 3;
  for (int j = 0; j < d; ++j) {
    if (header[2 + j] != "x_" + std::to_string(j + 1))
      throw ParseError("expected column x_" + std::to_string(j + 1), line_no);
  }

  struct Row {
    long individual;
    long time;
    Eigen::VectorXd x;
    double y;
  };
  std::vector<Row> rows;
  std::set<long> ids;
  long max_time = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) +
                           " fields, got " + std::to_string(fields.size()),
                       line_no);
    Row row;
    row.individual = parse_int(fields[0], line_no);
    row.time = parse_int(fields[1], line_no);
    if (row.time < 1)
      throw ParseError("time index must be >= 1", line_no);
    row.x.resize(d);
    for (int j = 0; j < d; ++j) row.x[j] = parse_double(fields[2 + j], line_no);
    row.y = parse_double(fields.back(), line_no);
    if (!row.x.allFinite() || !std::isfinite(row.y))
      throw ValidationError("non-finite value at line " +
                            std::to_string(line_no));
    ids.insert(row.individual);
    max_time = std::max(max_time, row.time);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no data rows", line_no);

  const int n = static_cast<int>(ids.size());
  const int t = static_cast<int>(max_time);
  std::map<long, int> id_index;
  int next = 0;
  for (long id : ids) id_index[id] = next++;

  const std::size_t nt = std::size_t(n) * std::size_t(t);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(Eigen::Index(nt), d);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(Eigen::Index(nt));
  std::vector<std::uint8_t> missing(nt, 1);
  for (const auto& row : rows) {
    const std::size_t p =
        std::size_t(id_index[row.individual]) * t + std::size_t(row.time - 1);
    if (!missing[p])
      throw ValidationError("duplicate pair (individual " +
                            std::to_string(row.individual) + ", time " +
                            std::to_string(row.time) + ")");
    missing[p] = 0;
    x.row(Eigen::Index(p)) = row.x;
    y[Eigen::Index(p)] = row.y;
  }
  return PanelDataset(n, t, d, std::move(x), std::move(y), std::move(missing));
}

void write_csv(const PanelDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "individual,time";
  for (int j = 1; j <= ds.n_features(); ++j) out << ",x_" << j;
  out << ",y\n";
  char buf[40];
  for (int i = 0; i < ds.n_individuals(); ++i) {
    for (int t = 0; t < ds.n_periods(); ++t) {
      if (ds.missing(i, t)) continue;
      out << (i + 1) << ',' << (t + 1);
      for (int j = 0; j < ds.n_features(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", ds.x(i, t)[j]);
        out << ',' << buf;
      }
      std::snprintf(buf, sizeof(buf), "%.17g", ds.y(i, t));
      out << ',' << buf << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

IndividualGram gram_extremes(const PanelDataset& ds) {
  IndividualGram result;
  result.u.resize(ds.n_individuals());
  result.l.resize(ds.n_individuals());
  for (int i = 0; i < ds.n_individuals(); ++i) {
    const Eigen::MatrixXd z = ds.individual_design(i);
    const Eigen::MatrixXd gram = z.transpose() * z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram,
                                                      Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    // round-off can push the smallest eigenvalue slightly negative
    result.l[i] = std::max(0.0, ev[0]);
    result.u[i] = std::max(0.0, ev[ev.size() - 1]);
  }
  return result;
}

double m_bound(const IndividualGram& grams) {
  double worst = 1.0;
  for (std::size_t i = 0; i < grams.u.size(); ++i) {
    const double u = grams.u[i];
    const double l = grams.l[i];
    if (l <= 1e-12 * u) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, u / l);
  }
  return worst;
}

double m_bound(const PanelDataset& ds) { return m_bound(gram_extremes(ds)); }

}  // namespace panelreg
