#include <doctest.h>

#include <cmath>
#include <limits>

#include "panelreg/dataset.hpp"
#include "panelreg/errors.hpp"
#include "test_util.hpp"

using namespace panelreg;
using testutil::Obs;

TEST_CASE("load_csv reads a fully observed panel") {
  const auto path = testutil::write_temp("full.csv",
                                         "individual,time,x_1,y\n"
                                         "1,1,1.0,2.0\n"
                                         "1,2,2.0,3.0\n"
                                         "2,1,0.5,1.0\n"
                                         "2,2,1.5,2.5\n");
  const PanelDataset ds = load_csv(path);
  CHECK(ds.n_individuals() == 2);
  CHECK(ds.n_periods() == 2);
  CHECK(ds.n_features() == 1);
  for (int i = 0; i < 2; ++i)
    for (int t = 0; t < 2; ++t) CHECK_FALSE(ds.missing(i, t));
  CHECK(ds.y(0, 1) == doctest::Approx(3.0));
  CHECK(ds.x(1, 0)[0] == doctest::Approx(0.5));
}

TEST_CASE("absent rows become masked (0,0) pairs") {
  const auto path = testutil::write_temp("gap.csv",
                                         "individual,time,x_1,y\n"
                                         "1,1,1.0,2.0\n"
                                         "2,1,0.5,1.0\n"
                                         "2,2,1.5,2.5\n");
  const PanelDataset ds = load_csv(path);
  CHECK(ds.missing(0, 1));
  CHECK(ds.x(0, 1)[0] == 0.0);
  CHECK(ds.y(0, 1) == 0.0);
  CHECK(ds.observed_pairs() == 3);
}

TEST_CASE("row order in the file is irrelevant") {
  const auto a = testutil::write_temp("order_a.csv",
                                      "individual,time,x_1,y\n"
                                      "1,1,1,2\n1,2,2,3\n");
  const auto b = testutil::write_temp("order_b.csv",
                                      "individual,time,x_1,y\n"
                                      "1,2,2,3\n1,1,1,2\n");
  CHECK(load_csv(a).fingerprint() == load_csv(b).fingerprint());
}

TEST_CASE("load_csv rejects bad input") {
  SUBCASE("non-finite value") {
    const auto path = testutil::write_temp("nan.csv",
                                           "individual,time,x_1,y\n"
                                           "1,1,1.0,NaN\n");
    CHECK_THROWS_AS(load_csv(path), ValidationError);
  }
  SUBCASE("malformed row carries the line number") {
    const auto path = testutil::write_temp("bad.csv",
                                           "individual,time,x_1,y\n"
                                           "1,1,1.0,2.0\n"
                                           "1,oops,1.0,2.0\n");
    try {
      load_csv(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("duplicate pair") {
    const auto path = testutil::write_temp("dup.csv",
                                           "individual,time,x_1,y\n"
                                           "1,1,1.0,2.0\n"
                                           "1,1,2.0,3.0\n");
    CHECK_THROWS_AS(load_csv(path), ValidationError);
  }
  SUBCASE("wrong field count") {
    const auto path = testutil::write_temp("short.csv",
                                           "individual,time,x_1,y\n"
                                           "1,1,1.0\n");
    CHECK_THROWS_AS(load_csv(path), ParseError);
  }
}

TEST_CASE("write_csv round-trips and omits masked pairs") {
  const auto ds = testutil::dataset_from_rows(
      2, 2, 2, {{0, 0, {1.0, 2.0}, 3.0}, {0, 1, {4.0, 5.0}, 6.0},
                {1, 1, {7.0, 8.0}, 9.0}});
  const auto path = testutil::temp_path("roundtrip.csv");
  write_csv(ds, path);
  const PanelDataset back = load_csv(path);
  CHECK(back.fingerprint() == ds.fingerprint());
  // the masked (i=2, t=1) row must not appear in the file
  CHECK(testutil::slurp(path).find("2,1,") == std::string::npos);
}

TEST_CASE("constructor validates masked-zero convention and finiteness") {
  Eigen::MatrixXd x(2, 1);
  x << 1.0, 2.0;
  Eigen::VectorXd y(2);
  y << 1.0, 2.0;
  CHECK_THROWS_AS(
      PanelDataset(1, 2, 1, x, y, std::vector<std::uint8_t>{0, 1}),
      ValidationError);
  Eigen::VectorXd bad = y;
  bad[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(
      PanelDataset(1, 2, 1, x, bad, std::vector<std::uint8_t>{0, 0}),
      ValidationError);
  CHECK_THROWS_AS(
      PanelDataset(0, 2, 1, x, y, std::vector<std::uint8_t>{0, 0}),
      ValidationError);
}

TEST_CASE("gram_extremes on hand-computed instances") {
  SUBCASE("identity Z") {
    // rows (1,0) and (0,1): Gram is the 2x2 identity
    const auto ds = testutil::dataset_from_rows(
        1, 2, 1, {{0, 0, {1.0}, 0.0}, {0, 1, {0.0}, 1.0}});
    const auto g = gram_extremes(ds);
    CHECK(g.u[0] == doctest::Approx(1.0));
    CHECK(g.l[0] == doctest::Approx(1.0));
  }
  SUBCASE("repeated row (1,0)") {
    // Gram [[2,0],[0,0]]
    const auto ds = testutil::dataset_from_rows(
        1, 2, 1, {{0, 0, {1.0}, 0.0}, {0, 1, {1.0}, 0.0}});
    const auto g = gram_extremes(ds);
    CHECK(g.u[0] == doctest::Approx(2.0));
    CHECK(g.l[0] == doctest::Approx(0.0));
  }
  SUBCASE("all-zero individual") {
    const auto ds = testutil::dataset_from_rows(1, 2, 1, {});
    const auto g = gram_extremes(ds);
    CHECK(g.u[0] == 0.0);
    CHECK(g.l[0] == 0.0);
  }
}

TEST_CASE("gram_extremes is invariant to reordering time periods") {
  panelreg::Rng rng(7);
  const auto ds = testutil::random_dataset(1, 5, 2, rng);
  std::vector<Obs> shuffled;
  const int perm[5] = {3, 0, 4, 1, 2};
  for (int t = 0; t < 5; ++t) {
    Obs o;
    o.i = 0;
    o.t = perm[t];
    o.x = {ds.x(0, t)[0], ds.x(0, t)[1]};
    o.y = ds.y(0, t);
    shuffled.push_back(o);
  }
  const auto reordered = testutil::dataset_from_rows(1, 5, 2, shuffled);
  const auto ga = gram_extremes(ds);
  const auto gb = gram_extremes(reordered);
  CHECK(ga.u[0] == doctest::Approx(gb.u[0]).epsilon(1e-12));
  CHECK(ga.l[0] == doctest::Approx(gb.l[0]).epsilon(1e-12));
}

TEST_CASE("masked pairs contribute nothing to the Gram") {
  const auto with_gap = testutil::dataset_from_rows(
      1, 3, 1, {{0, 0, {1.0}, 2.0}, {0, 2, {3.0}, 4.0}});
  const auto dense = testutil::dataset_from_rows(
      1, 2, 1, {{0, 0, {1.0}, 2.0}, {0, 1, {3.0}, 4.0}});
  const auto ga = gram_extremes(with_gap);
  const auto gb = gram_extremes(dense);
  CHECK(ga.u[0] == doctest::Approx(gb.u[0]).epsilon(1e-12));
  CHECK(ga.l[0] == doctest::Approx(gb.l[0]).epsilon(1e-12));
}

TEST_CASE("m_bound") {
  SUBCASE("identity Grams give M = 1") {
    const auto ds = testutil::dataset_from_rows(
        2, 2, 1, {{0, 0, {1.0}, 0.0}, {0, 1, {0.0}, 1.0},
                  {1, 0, {1.0}, 0.0}, {1, 1, {0.0}, 1.0}});
    CHECK(m_bound(ds) == doctest::Approx(1.0));
  }
  SUBCASE("max of per-individual ratios") {
    IndividualGram g;
    g.u = {2.0, 3.0};
    g.l = {1.0, 1.0};
    CHECK(m_bound(g) == doctest::Approx(3.0));
  }
  SUBCASE("rank-deficient individual gives infinity") {
    const auto ds = testutil::dataset_from_rows(
        1, 2, 1, {{0, 0, {1.0}, 0.0}, {0, 1, {1.0}, 0.0}});
    CHECK(std::isinf(m_bound(ds)));
  }
  SUBCASE("finite iff every smallest eigenvalue is positive") {
    panelreg::Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const int T = 1 + int(rng.below(4));
      const auto ds = testutil::random_dataset(3, T, 2, rng);
      const auto g = gram_extremes(ds);
      bool all_positive = true;
      for (std::size_t i = 0; i < g.l.size(); ++i)
        if (g.l[i] <= 1e-12 * g.u[i]) all_positive = false;
      CHECK(std::isfinite(m_bound(g)) == all_positive);
    }
  }
}

TEST_CASE("individual_slice preserves the rows of one individual") {
  panelreg::Rng rng(23);
  const auto ds = testutil::random_dataset(4, 3, 2, rng);
  const auto slice = ds.individual_slice(2);
  CHECK(slice.n_individuals() == 1);
  CHECK(slice.n_periods() == 3);
  for (int t = 0; t < 3; ++t) {
    CHECK(slice.y(0, t) == ds.y(2, t));
    CHECK(slice.x(0, t)[1] == ds.x(2, t)[1]);
  }
}
