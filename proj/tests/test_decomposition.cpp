#include <cmath>
#include <random>

#include "doctest.h"
#include "homlab/decomposition.hpp"
#include "homlab/error.hpp"
#include "support.hpp"

using namespace homlab;
using homlab::testing::random_integer_matrix;
using homlab::testing::uniform_int;

namespace {

ContingencyTable t2(double a, double b, double c, double d) { return ContingencyTable(Matrix{{a, b}, {c, d}}); }

const ContingencyTable kDivergenceEarly = t2(6, 26, 58, 59);
const ContingencyTable kDivergenceLate = t2(12, 6, 59, 12);

}  // namespace

TEST_CASE("no change means no effects") {
  auto t = t2(40, 10, 20, 30);
  for (auto method : {Method::IPF, Method::MDbA, Method::MEDA, Method::NM}) {
    for (auto scheme : {Scheme::Sequential, Scheme::WithInteraction}) {
      auto r = decompose(t, t, method, scheme);
      CHECK(r.nonstructural_effect == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(r.structural_effect == doctest::Approx(0.0).epsilon(1e-12));
      if (r.interaction_effect) CHECK(*r.interaction_effect == doctest::Approx(0.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("a pure margin change is all structural under IPF") {
  auto early = t2(40, 10, 20, 30);
  auto late = ipf_fit(early, Marginals::from({70, 30}, {55, 45})).table;
  auto r = decompose(early, late, Method::IPF, Scheme::Sequential);
  CHECK(std::fabs(r.nonstructural_effect) <= 1e-9);
  CHECK(r.structural_effect == doctest::Approx(r.total_change()));
}

TEST_CASE("NM decomposition of a hand-inverted 2x2 example") {
  auto early = t2(40, 10, 20, 30);
  auto late = t2(20, 20, 10, 50);
  // Oracle: invert the LL formula at the early margins by hand.
  // late: R = 60*70/100 = 42, min = 60, LL = 8/18.
  // early margins: rows (50,50), cols (60,40): R = 20, min = 40.
  const double ll_late = (50.0 - 42.0) / (60.0 - 42.0);
  const double d = ll_late * (40.0 - 20.0) + 20.0;
  const double a = 100.0 - 40.0 - 50.0 + d;
  const double share_cf = (a + d) / 100.0;
  CHECK(share_cf == doctest::Approx(0.677778).epsilon(1e-6));

  auto r = decompose(early, late, Method::NM, Scheme::Sequential);
  CHECK(r.share_early == doctest::Approx(0.70));
  CHECK(r.share_late == doctest::Approx(0.70));
  CHECK(r.share_counterfactual == doctest::Approx(share_cf).epsilon(1e-12));
  CHECK(r.nonstructural_effect == doctest::Approx(share_cf - 0.70).epsilon(1e-12));
  CHECK(r.structural_effect == doctest::Approx(0.70 - share_cf).epsilon(1e-12));

  // Reverse counterfactual: early LL 0.5 at late margins, R = 42, min = 60.
  auto w = decompose(early, late, Method::NM, Scheme::WithInteraction);
  const double d_rev = 0.5 * (60.0 - 42.0) + 42.0;
  const double a_rev = 100.0 - 70.0 - 60.0 + d_rev;
  CHECK(*w.share_reverse_counterfactual == doctest::Approx((a_rev + d_rev) / 100.0).epsilon(1e-12));
  CHECK(w.structural_effect == doctest::Approx((a_rev + d_rev) / 100.0 - 0.70).epsilon(1e-12));
}

TEST_CASE("effects add up to the observed change") {
  std::mt19937_64 rng(17);
  int checked = 0;
  for (int s = 0; s < 600; ++s) {
    std::size_t n = uniform_int(rng, 0, 1) ? 2 : 3;
    ContingencyTable early(random_integer_matrix(rng, n, n, 1, 50));
    ContingencyTable late(random_integer_matrix(rng, n, n, 1, 50));
    for (auto method : {Method::IPF, Method::MDbA, Method::MEDA, Method::NM}) {
      if (method == Method::MDbA && n != 2) continue;
      for (auto scheme : {Scheme::Sequential, Scheme::WithInteraction}) {
        try {
          auto r = decompose(early, late, method, scheme);
          double sum = r.nonstructural_effect + r.structural_effect + r.interaction_effect.value_or(0.0);
          CHECK(std::fabs(sum - r.total_change()) <= 1e-12);
          ++checked;
        } catch (const InfeasibleError&) {
        }
      }
    }
    std::vector<double> sm{5, 7, 9}, sw{4, 6, 8};
    sm.resize(n);
    sw.resize(n);
    TableWithSingles es(early, sm, sw);
    TableWithSingles ls(late, es.single_men, es.single_women);
    for (auto scheme : {Scheme::Sequential, Scheme::WithInteraction}) {
      auto r = decompose(es, ls, scheme);
      CHECK(std::fabs(r.nonstructural_effect + r.structural_effect + r.interaction_effect.value_or(0.0) -
                      r.total_change()) <= 1e-12);
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("swapping generations mirrors the interaction scheme") {
  std::mt19937_64 rng(19);
  for (int s = 0; s < 300; ++s) {
    ContingencyTable early(random_integer_matrix(rng, 2, 2, 1, 50));
    ContingencyTable late(random_integer_matrix(rng, 2, 2, 1, 50));
    for (auto method : {Method::IPF, Method::MEDA, Method::NM}) {
      try {
        auto fwd = decompose(early, late, method, Scheme::WithInteraction);
        auto back = decompose(late, early, method, Scheme::WithInteraction);
        CHECK(back.nonstructural_effect ==
              doctest::Approx(-(fwd.nonstructural_effect + *fwd.interaction_effect)).epsilon(1e-12));
        CHECK(back.structural_effect ==
              doctest::Approx(-(fwd.structural_effect + *fwd.interaction_effect)).epsilon(1e-12));
      } catch (const InfeasibleError&) {
      }
    }
  }
}

TEST_CASE("IPF and NM disagree in sign on the divergence fixture") {
  auto ipf = decompose(kDivergenceEarly, kDivergenceLate, Method::IPF, Scheme::Sequential);
  auto nm = decompose(kDivergenceEarly, kDivergenceLate, Method::NM, Scheme::Sequential);
  CHECK(ipf.nonstructural_effect > 0.0);
  CHECK(nm.nonstructural_effect < 0.0);
}

TEST_CASE("decompose rejects mismatched tables") {
  CHECK_THROWS_AS(decompose(t2(1, 2, 3, 4), ContingencyTable(Matrix{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}}),
                            Method::NM, Scheme::Sequential),
                  ShapeError);
  CHECK_THROWS_AS(decompose(t2(1, 49, 49, 1), t2(1, 49, 49, 1).scaled(1.0), Method::CSA, Scheme::Sequential),
                  ValidationError);
  // Strong negative sorting forced onto skewed margins: NM signals it.
  CHECK_THROWS_AS(decompose(t2(10, 0, 0, 90), t2(1, 49, 49, 1), Method::NM, Scheme::Sequential), InfeasibleError);
}

TEST_CASE("cumulative series") {
  auto t = t2(40, 10, 20, 30);
  std::vector<Wave> flat{{1960, t}, {1970, t}, {1980, t}};
  auto s = cumulative_series(flat, Method::NM, Scheme::Sequential);
  CHECK(s.anchor_year == 1960);
  for (const auto& v : s.cumulative) CHECK(*v == doctest::Approx(0.70));

  auto late = t2(20, 20, 10, 50);
  auto two = cumulative_series({{1960, t}, {1970, late}}, Method::NM, Scheme::Sequential);
  CHECK(*two.cumulative[1] ==
        doctest::Approx(0.70 + decompose(t, late, Method::NM, Scheme::Sequential).nonstructural_effect));

  // Three waves chained: cumulative = anchor + running sum of effects.
  auto w3 = t2(30, 15, 15, 40);
  auto three = cumulative_series({{1960, t}, {1970, late}, {1980, w3}}, Method::IPF, Scheme::Sequential);
  double e1 = decompose(t, late, Method::IPF, Scheme::Sequential).nonstructural_effect;
  double e2 = decompose(late, w3, Method::IPF, Scheme::Sequential).nonstructural_effect;
  CHECK(*three.cumulative[2] == doctest::Approx(0.70 + e1 + e2).epsilon(1e-12));

  auto gap = cumulative_series({{1960, t}, {1970, std::nullopt}, {1980, t}, {1990, t}}, Method::NM,
                               Scheme::Sequential);
  CHECK(gap.cumulative[0].has_value());
  CHECK_FALSE(gap.cumulative[1].has_value());
  CHECK_FALSE(gap.cumulative[2].has_value());
  CHECK_FALSE(gap.cumulative[3].has_value());
  CHECK(gap.nonstructural_effects[3].has_value());

  CHECK_THROWS_AS(cumulative_series({{1960, t}, {1970, std::nullopt}}, Method::NM, Scheme::Sequential),
                  InsufficientData);
}
