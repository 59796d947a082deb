#include <array>
#include <cmath>
#include <random>

#include "doctest.h"
#include "homlab/counterfactual.hpp"
#include "homlab/error.hpp"
#include "support.hpp"

using namespace homlab;
using homlab::testing::max_rel_marginal_error;
using homlab::testing::random_integer_matrix;
using homlab::testing::uniform_int;
using homlab::testing::uniform_real;

namespace {

ContingencyTable t2(double a, double b, double c, double d) { return ContingencyTable(Matrix{{a, b}, {c, d}}); }
const ContingencyTable kExample = t2(40, 10, 20, 30);
Marginals margins(std::vector<double> r, std::vector<double> c) { return Marginals::from(r, c); }

void check_table(const ContingencyTable& got, const Matrix& want, double tol = 1e-9) {
  CHECK(max_abs_diff(got.counts(), want) <= tol);
}

// 2x2 table with the given margins and H,H cell d.
ContingencyTable with_hh(const Marginals& m, double d) {
  return t2(m.total - m.row_sums[1] - m.col_sums[1] + d, m.col_sums[1] - d, m.row_sums[1] - d, d);
}

}  // namespace

TEST_CASE("survival grid recovers cells") {
  ContingencyTable t(Matrix{{1, 2, 3}, {4, 5, 6}});
  SurvivalGrid g(t);
  CHECK(g(0, 0) == 21);
  CHECK(g(1, 1) == 11);
  CHECK(g(2, 0) == 0);
  CHECK(g(0, 3) == 0);
  CHECK(g.cells() == t.counts());
}

TEST_CASE("IPF") {
  check_table(ipf_fit(kExample, marginals(kExample)).table, kExample.counts());
  // Closed form: the unique table with rows (60,40), cols (50,50) and odds ratio 6.
  auto r = ipf_fit(kExample, margins({60, 40}, {50, 50}));
  check_table(r.table, Matrix{{40, 20}, {10, 30}}, 1e-8);
  CHECK(odds_ratio(r.table) == doctest::Approx(6.0).epsilon(1e-9));
  check_table(ipf_fit(kExample, marginals(kExample).scaled(2)).table, kExample.counts() * 2.0, 1e-8);

  auto zeros = ipf_fit(ContingencyTable(Matrix{{5, 0, 1}, {2, 3, 4}, {0, 1, 6}}),
                       margins({10, 10, 10}, {8, 9, 13}));
  CHECK(zeros.table(0, 1) == 0.0);
  CHECK(zeros.table(2, 0) == 0.0);

  CHECK_THROWS_AS(ipf_fit(t2(5, 5, 0, 0), margins({5, 5}, {5, 5})), InfeasibleError);
  // Structural zeros make these margins unreachable.
  CHECK_THROWS_AS(ipf_fit(t2(5, 0, 0, 5), margins({8, 2}, {2, 8}), {1e-10, 200}), ConvergenceError);
}

TEST_CASE("MDbA") {
  auto r = mdba_fit(kExample, margins({40, 60}, {50, 50}));
  check_table(r.table, Matrix{{30, 10}, {20, 40}});
  CHECK(determinant(r.table) == doctest::Approx(1000.0));
  check_table(mdba_fit(kExample, marginals(kExample)).table, kExample.counts());
  auto target = margins({30, 70}, {45, 55});
  check_table(mdba_fit(t2(24, 16, 36, 24), target).table, random_match(target).counts());
  CHECK_THROWS_AS(mdba_fit(ContingencyTable(Matrix{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}}),
                           margins({6, 15, 24}, {12, 15, 18})),
                  ShapeError);
  // det 2500 forced onto margins where d cannot exceed 10.
  CHECK_THROWS_AS(mdba_fit(t2(50, 0, 0, 50), margins({90, 10}, {90, 10})), InfeasibleError);
}

TEST_CASE("MEDA") {
  auto r = meda_fit(kExample, margins({40, 60}, {50, 50}));
  CHECK(r.diagnostics.at("v") == doctest::Approx(0.5));
  check_table(r.table, Matrix{{30, 10}, {20, 40}});

  auto own = marginals(kExample);
  auto target = margins({30, 70}, {45, 55});
  auto from_random = meda_fit(random_match(own), target);
  CHECK(from_random.diagnostics.at("v") == doctest::Approx(0.0).epsilon(1e-12));
  check_table(from_random.table, random_match(target).counts());
  auto from_pam = meda_fit(pam_match(own), target);
  CHECK(from_pam.diagnostics.at("v") == doctest::Approx(1.0));
  check_table(from_pam.table, pam_match(target).counts());

  CHECK_THROWS_AS(meda_fit(t2(10, 0, 0, 0), margins({5, 5}, {5, 5})), UndefinedWeight);
  try {
    meda_fit(t2(1, 49, 49, 1), margins({10, 90}, {10, 90}));
    FAIL("expected infeasibility");
  } catch (const InfeasibleError& e) {
    CHECK(std::string(e.what()).find("v = -0.96") != std::string::npos);
  }
}

TEST_CASE("MEDA weight on 2x2 tables is the V-value") {
  std::mt19937_64 rng(9);
  for (int s = 0; s < 500; ++s) {
    ContingencyTable t(random_integer_matrix(rng, 2, 2, 1, 50));
    CHECK(meda_weight(t) == doctest::Approx(v_value(t)).epsilon(1e-12));
  }
}

TEST_CASE("NM") {
  auto r = nm_fit(kExample, margins({40, 60}, {50, 50}));
  check_table(r.table, Matrix{{30, 10}, {20, 40}});
  CHECK(ll_simplified(r.table).value == doctest::Approx(0.5));
  check_table(nm_fit(kExample, marginals(kExample)).table, kExample.counts());
  check_table(nm_fit(t2(50, 0, 0, 50), margins({30, 70}, {70, 30})).table, Matrix{{30, 0}, {40, 30}});

  try {
    nm_fit(t2(1, 49, 49, 1), margins({10, 90}, {10, 90}));
    FAIL("expected infeasibility");
  } catch (const InfeasibleError& e) {
    CHECK(e.row() == 0);
    CHECK(e.col() == 0);
    CHECK(e.value() < 0.0);
  }
  CHECK_THROWS_AS(nm_fit(ContingencyTable(Matrix{{0, 3, 2}, {0, 0, 0}, {0, 0, 0}}),
                         margins({5, 5, 5}, {5, 5, 5})),
                  UndefinedIndicator);
}

TEST_CASE("NM keeps the whole GLL matrix on n x m tables") {
  std::mt19937_64 rng(21);
  int done = 0;
  while (done < 100) {
    std::size_t n = 2 + uniform_int(rng, 0, 2), m = 2 + uniform_int(rng, 0, 2);
    ContingencyTable src(random_integer_matrix(rng, n, m, 1, 50));
    auto target = marginals(ContingencyTable(random_integer_matrix(rng, n, m, 1, 50)));
    for (auto rounding : {Rounding::PaperInteger, Rounding::Continuous}) {
      try {
        auto r = nm_fit(src, target, rounding);
        CHECK(max_rel_marginal_error(r.table, target) <= 1e-9);
        CHECK(max_abs_diff(gll(r.table, rounding).values(), gll(src, rounding).values()) <= 1e-9);
        ++done;
      } catch (const InfeasibleError&) {
      }
    }
  }
}

TEST_CASE("NM and MEDA coincide on 2x2 when R is integral on both sides") {
  // Brute force first: scan the free cell d over the feasible segment and
  // take the table whose LL (resp. V) value matches the source.
  std::mt19937_64 rng(33);
  int brute = 0, total = 0;
  while (total < 200) {
    ContingencyTable src(random_integer_matrix(rng, 2, 2, 0, 50));
    if (src.total() == 0) continue;
    const double Rs = (src(1, 0) + src(1, 1)) * (src(0, 1) + src(1, 1)) / src.total();
    const double ms = std::min(src(1, 0) + src(1, 1), src(0, 1) + src(1, 1));
    if (Rs != integer_part(Rs) || src(1, 1) < Rs || std::fabs(ms - Rs) < 0.5) continue;
    auto target = marginals(ContingencyTable(random_integer_matrix(rng, 2, 2, 0, 50)));
    if (target.total == 0) continue;
    double Rt = target.row_sums[1] * target.col_sums[1] / target.total;
    double mt = std::min(target.row_sums[1], target.col_sums[1]);
    if (Rt != integer_part(Rt) || std::fabs(mt - integer_part(Rt)) < 0.5) continue;

    auto nm = nm_fit(src, target);
    auto meda = meda_fit(src, target);
    CHECK(max_abs_diff(nm.table.counts(), meda.table.counts()) <= 1e-9);

    if (brute < 20) {
      double lo = std::max(0.0, target.row_sums[1] + target.col_sums[1] - target.total);
      double hi = mt;
      double want_ll = ll_simplified(src).value, want_v = v_value(src);
      double best_ll = lo, best_v = lo, err_ll = 1e300, err_v = 1e300;
      const int steps = 200000;
      for (int i = 0; i <= steps; ++i) {
        double d = lo + (hi - lo) * i / steps;
        auto cand = with_hh(target, d);
        try {
          double e1 = std::fabs(ll_simplified(cand).value - want_ll);
          if (e1 < err_ll) err_ll = e1, best_ll = d;
        } catch (const UndefinedIndicator&) {
        }
        try {
          double e2 = std::fabs(v_value(cand) - want_v);
          if (e2 < err_v) err_v = e2, best_v = d;
        } catch (const UndefinedIndicator&) {
        }
      }
      double step = (hi - lo) / steps;
      CHECK(std::fabs(best_ll - nm.table(1, 1)) <= step + 1e-9);
      CHECK(std::fabs(best_v - meda.table(1, 1)) <= step + 1e-9);
      ++brute;
    }
    ++total;
  }
}

TEST_CASE("NM in continuous mode commutes with category merging; IPF does not") {
  std::mt19937_64 rng(55);
  int nm_checked = 0;
  bool ipf_broken = false;
  for (int s = 0; s < 400; ++s) {
    ContingencyTable late(random_integer_matrix(rng, 3, 3, 1, 50));
    auto early = marginals(ContingencyTable(random_integer_matrix(rng, 3, 3, 1, 50)));
    auto rp = uniform_int(rng, 0, 1) ? partition_from_sizes({1, 2}) : partition_from_sizes({2, 1});
    auto cp = uniform_int(rng, 0, 1) ? partition_from_sizes({1, 2}) : partition_from_sizes({2, 1});
    try {
      auto full = nm_fit(late, early, Rounding::Continuous);
      auto coarse = nm_fit(merge_categories(late, rp, cp), merge_marginals(early, rp, cp), Rounding::Continuous);
      CHECK(max_abs_diff(merge_categories(full.table, rp, cp).counts(), coarse.table.counts()) <= 1e-9);
      ++nm_checked;
    } catch (const InfeasibleError&) {
    }
    auto full = ipf_fit(late, early);
    auto coarse = ipf_fit(merge_categories(late, rp, cp), merge_marginals(early, rp, cp));
    if (max_abs_diff(merge_categories(full.table, rp, cp).counts(), coarse.table.counts()) > 1e-7) ipf_broken = true;
  }
  CHECK(nm_checked > 100);
  CHECK(ipf_broken);
}

TEST_CASE("CSA") {
  TableWithSingles src(ContingencyTable(Matrix{{4, 2}, {2, 8}}), {1, 2}, {1, 2});
  auto same = csa_fit(src, src.men_population(), src.women_population(), {1e-13, 100000, 0.5});
  CHECK(max_abs_diff(same.table.counts(), src.couples.counts()) <= 1e-9);
  CHECK(same.single_men[0] == doctest::Approx(1.0));
  CHECK(same.single_women[1] == doctest::Approx(2.0));

  TableWithSingles none(ContingencyTable(Matrix{{0, 0}, {0, 0}}), {3, 4}, {5, 6});
  auto alone = csa_fit(none, {10, 20}, {30, 40});
  CHECK(alone.table.counts() == Matrix(2, 2));
  CHECK(alone.single_men[1] == doctest::Approx(20.0));

  CHECK_THROWS_AS(csa_fit(src, {0, 12}, {7, 12}), InfeasibleError);
  CHECK_THROWS_AS(csa_fit(TableWithSingles(src.couples, {0, 2}, {1, 2}), {7, 12}, {7, 12}), UndefinedIndicator);
  CHECK_THROWS_AS(csa_fit(src, {14, 24}, {14, 24}, {1e-14, 3, 0.5}), ConvergenceError);
}

TEST_CASE("CSA solution agrees with a grid search over singles") {
  TableWithSingles src(ContingencyTable(Matrix{{4, 2}, {2, 8}}), {1, 2}, {1, 2});
  const std::vector<double> men{14, 24}, women{14, 24};
  auto r = csa_fit(src, men, women);

  // Oracle: coarse-to-fine grid over (sm1, sm2, sw1, sw2) minimizing the
  // squared population-identity residuals of the surplus-preserving couples.
  auto msm = surplus_matrix(src);
  auto residual = [&](const std::array<double, 4>& s) {
    double e = 0.0;
    for (int i = 0; i < 2; ++i) {
      double tot = s[i];
      for (int j = 0; j < 2; ++j) tot += msm(i, j) * std::sqrt(s[i] * s[2 + j]);
      e += (tot - men[i]) * (tot - men[i]);
    }
    for (int j = 0; j < 2; ++j) {
      double tot = s[2 + j];
      for (int i = 0; i < 2; ++i) tot += msm(i, j) * std::sqrt(s[i] * s[2 + j]);
      e += (tot - women[j]) * (tot - women[j]);
    }
    return e;
  };
  std::array<double, 4> center{7, 12, 7, 12};
  double half = 7.0;
  for (int level = 0; level < 40; ++level) {
    std::array<double, 4> best = center;
    double best_e = residual(center);
    const int k = 6;
    for (int a = -k; a <= k; ++a)
      for (int b = -k; b <= k; ++b)
        for (int c = -k; c <= k; ++c)
          for (int d = -k; d <= k; ++d) {
            std::array<double, 4> p{center[0] + half * a / k, center[1] + half * b / k, center[2] + half * c / k,
                                    center[3] + half * d / k};
            if (p[0] <= 0 || p[1] <= 0 || p[2] <= 0 || p[3] <= 0) continue;
            double e = residual(p);
            if (e < best_e) best_e = e, best = p;
          }
    center = best;
    half *= 0.5;
  }
  CHECK(std::fabs(r.single_men[0] - center[0]) <= 1e-3);
  CHECK(std::fabs(r.single_men[1] - center[1]) <= 1e-3);
  CHECK(std::fabs(r.single_women[0] - center[2]) <= 1e-3);
  CHECK(std::fabs(r.single_women[1] - center[3]) <= 1e-3);
}

TEST_CASE("fit dispatch") {
  auto target = margins({40, 60}, {50, 50});
  CHECK(fit(Method::NM, kExample, target).method == Method::NM);
  CHECK(fit(Method::MEDA, kExample, target).method == Method::MEDA);
  CHECK_THROWS_AS(fit(Method::CSA, kExample, target), ValidationError);
  CHECK(parse_method("Ipf") == Method::IPF);
  CHECK_THROWS_AS(parse_method("gs"), ValidationError);
}
