#include <cmath>

#include "doctest.h"
#include "homlab/criteria.hpp"
#include "homlab/error.hpp"

using namespace homlab;

namespace {

ContingencyTable t2(double a, double b, double c, double d) { return ContingencyTable(Matrix{{a, b}, {c, d}}); }

const ContingencyTable kBase = t2(40, 10, 20, 30);

// Small option set so the suite stays fast; verdicts are stable at this size.
CheckOptions quick() {
  CheckOptions o;
  o.samples = 300;
  o.enumeration_samples = 15;
  return o;
}

}  // namespace

TEST_CASE("perturbation examples") {
  CHECK(apply_perturbation(kBase, {PerturbationKind::Scale, 2.0, {}}).counts() == Matrix{{80, 20}, {40, 60}});
  CHECK(apply_perturbation(kBase, {PerturbationKind::Type1Row, 2.0, {}}).counts() == Matrix{{40, 10}, {40, 60}});
  CHECK(apply_perturbation(kBase, {PerturbationKind::Type2Row, 0.5, {}}).counts() == Matrix{{20, 5}, {40, 35}});
  CHECK(apply_perturbation(kBase, {PerturbationKind::Type1Col, 2.0, {}}).counts() == Matrix{{40, 20}, {20, 60}});
  CHECK(apply_perturbation(kBase, {PerturbationKind::Type2Col, 0.5, {}}).counts() == Matrix{{20, 30}, {10, 40}});
}

TEST_CASE("perturbations move singles with couples") {
  TableWithSingles t(kBase, {6, 4}, {8, 2});
  auto p = apply_perturbation(t, {PerturbationKind::Type2Row, 0.5, {}});
  CHECK(p.single_men == std::vector<double>{3, 7});
  CHECK(p.single_women == std::vector<double>{8, 2});
  auto q = apply_perturbation(t, {PerturbationKind::Type1Col, 3.0, {}});
  CHECK(q.single_women == std::vector<double>{8, 6});
  auto s = apply_perturbation(t, {PerturbationKind::VoluntarySingles, 0.0, {1, 2, 3, 4}});
  CHECK(s.couples.counts() == kBase.counts());
  CHECK(s.single_men == std::vector<double>{7, 6});
  CHECK(s.single_women == std::vector<double>{11, 6});
}

TEST_CASE("perturbation errors") {
  ContingencyTable t3(Matrix{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  CHECK_THROWS_AS(apply_perturbation(t3, {PerturbationKind::Type1Row, 2.0, {}}), ShapeError);
  CHECK_THROWS_AS(apply_perturbation(kBase, {PerturbationKind::Type2Row, 1.5, {}}), ValidationError);
  CHECK_THROWS_AS(apply_perturbation(kBase, {PerturbationKind::Scale, -1.0, {}}), ValidationError);
  CHECK_THROWS_AS(apply_perturbation(kBase, {PerturbationKind::InvoluntarySingles, 0.0, {1, 1, 1, 1}}), ShapeError);
  TableWithSingles t(kBase, {6, 4}, {8, 2});
  CHECK_THROWS_AS(apply_perturbation(t, {PerturbationKind::InvoluntarySingles, 0.0, {1, -1, 1, 1}}),
                  ValidationError);
}

TEST_CASE("names round-trip") {
  for (int i = 0; i <= static_cast<int>(Criterion::AC12); ++i) {
    auto c = static_cast<Criterion>(i);
    CHECK(parse_criterion(to_string(c)) == c);
  }
  for (Indicator i : kAllIndicators) {
    CHECK(parse_indicator(code(i)) == i);
    CHECK(parse_indicator(to_string(i)) == i);
  }
  CHECK_THROWS_AS(parse_criterion("AC13"), ValidationError);
  CHECK_THROWS_AS(parse_indicator("kappa"), ValidationError);
}

TEST_CASE("indicator checker examples") {
  auto o = quick();
  CHECK(check_indicator(Criterion::AC5_1, Indicator::OddsRatio, o).verdict == Verdict::Satisfied);
  CHECK(check_indicator(Criterion::AC5_1, Indicator::AggregateMsp, o).verdict == Verdict::Counterexample);
  CHECK(check_indicator(Criterion::AC7, Indicator::Determinant, o).verdict == Verdict::Counterexample);
  CHECK(check_indicator(Criterion::AC2, Indicator::Determinant, o).verdict == Verdict::Counterexample);
  CHECK(check_indicator(Criterion::AC3, Indicator::Regression, o).verdict == Verdict::Counterexample);
  CHECK(check_indicator(Criterion::AC6, Indicator::Regression, o).verdict == Verdict::NotApplicable);
  CHECK(check_indicator(Criterion::AC8_2, Indicator::LL, o).verdict == Verdict::NotAutomated);
  CHECK(*check_indicator(Criterion::AC1, Indicator::VValue, o).metadata == false);
  CHECK(*check_indicator(Criterion::AC1, Indicator::OddsRatio, o).metadata == true);
}

TEST_CASE("method checker examples") {
  auto o = quick();
  CHECK(check_method(Criterion::AC10, Method::NM, o).verdict == Verdict::Satisfied);
  CHECK(check_method(Criterion::AC10, Method::IPF, o).verdict == Verdict::Counterexample);
  CHECK(check_method(Criterion::AC12, Method::NM, o).verdict == Verdict::Satisfied);
  CHECK(check_method(Criterion::AC12, Method::IPF, o).verdict == Verdict::Counterexample);
  CHECK(check_method(Criterion::AC12, Method::CSA, o).verdict == Verdict::Counterexample);
  CHECK(check_method(Criterion::AC10, Method::MDbA, o).verdict == Verdict::NotApplicable);
  auto paper = o;
  paper.nm_rounding = Rounding::PaperInteger;
  CHECK(check_method(Criterion::AC2, Method::NM, paper).verdict == Verdict::Counterexample);
}

TEST_CASE("crafted AC12 cases are unattainable") {
  // Source LL (continuous) -0.96; the lowest LL at rows/cols (10,90) is (80-81)/(90-81).
  Witness w;
  w.table = TableWithSingles(t2(1, 49, 49, 1), {10, 10}, {10, 10});
  w.target = Marginals::from({10, 90}, {10, 90});
  CHECK(method_violation(Criterion::AC12, Method::IPF, w) == doctest::Approx(0.96 - 1.0 / 9.0));
  CHECK(method_violation(Criterion::AC12, Method::NM, w) == 0.0);
  CHECK_THROWS_AS(nm_fit(w.table.couples, *w.target), InfeasibleError);
}

TEST_CASE("every counterexample replays") {
  auto o = quick();
  for (const auto& r : indicator_matrix(o)) {
    if (r.verdict != Verdict::Counterexample) continue;
    INFO(to_string(r.criterion) << " " << r.subject);
    REQUIRE(r.witness.has_value());
    double v = indicator_violation(r.criterion, parse_indicator(r.subject.substr(r.subject.find(' ') + 1)), *r.witness);
    CHECK(v > kViolationThreshold);
    CHECK(v == doctest::Approx(r.witness->violation));
  }
  for (const auto& r : method_matrix(o)) {
    if (r.verdict != Verdict::Counterexample) continue;
    INFO(to_string(r.criterion) << " " << r.subject);
    REQUIRE(r.witness.has_value());
    double v = method_violation(r.criterion, parse_method(r.subject), *r.witness);
    CHECK(v > kViolationThreshold);
    CHECK(v == doctest::Approx(r.witness->violation));
  }
}

TEST_CASE("reports are deterministic") {
  auto o = quick();
  for (auto c : {Criterion::AC2, Criterion::AC5_2, Criterion::AC8_1}) {
    auto a = check_indicator(c, Indicator::Covariance, o);
    auto b = check_indicator(c, Indicator::Covariance, o);
    CHECK(a.verdict == b.verdict);
    CHECK(a.sample_size == b.sample_size);
    CHECK((a.witness ? a.witness->violation : 0.0) == (b.witness ? b.witness->violation : 0.0));
  }
  auto a = check_method(Criterion::AC10, Method::CSA, o);
  auto b = check_method(Criterion::AC10, Method::CSA, o);
  CHECK(a.sample_size == b.sample_size);
  CHECK(a.witness->table.couples.counts() == b.witness->table.couples.counts());
}

TEST_CASE("verdict rows") {
  auto o = quick();
  auto verdict = [&](Criterion c, Indicator i) { return check_indicator(c, i, o).verdict; };
  for (Indicator i : kAllIndicators) {
    INFO(to_string(i));
    // Gender symmetry fails only for the one-sided regression slope.
    CHECK(verdict(Criterion::AC3, i) == (i == Indicator::Regression ? Verdict::Counterexample : Verdict::Satisfied));
    // Only the odds ratio is immune to type-1 changes.
    CHECK(verdict(Criterion::AC5_1, i) ==
          (i == Indicator::OddsRatio ? Verdict::Satisfied : Verdict::Counterexample));
    // No indicator here is immune to type-2 changes, the aggregate MSP included.
    CHECK(verdict(Criterion::AC5_2, i) == Verdict::Counterexample);
  }
  // Category symmetry holds for every applicable indicator, the aggregate MSP included.
  CHECK(verdict(Criterion::AC4, Indicator::AggregateMsp) == Verdict::Satisfied);
  CHECK(verdict(Criterion::AC4, Indicator::Msm) == Verdict::NotApplicable);
  // Scale invariance: the determinant fails; the LL family fails through int(R).
  CHECK(verdict(Criterion::AC2, Indicator::OddsRatio) == Verdict::Satisfied);
  CHECK(verdict(Criterion::AC2, Indicator::LL) == Verdict::Counterexample);
  auto cont = o;
  cont.rounding = Rounding::Continuous;
  CHECK(check_indicator(Criterion::AC2, Indicator::LL, cont).verdict == Verdict::Satisfied);
  CHECK(check_indicator(Criterion::AC2, Indicator::GLL, cont).verdict == Verdict::Satisfied);
  // Monotonicity in diagonal cells: covariance and the matrix-valued GLL fail.
  CHECK(verdict(Criterion::AC8_1, Indicator::Covariance) == Verdict::Counterexample);
  CHECK(verdict(Criterion::AC8_1, Indicator::GLL) == Verdict::Counterexample);
  CHECK(verdict(Criterion::AC8_1, Indicator::LL) == Verdict::Satisfied);
  // PAM criteria.
  for (Indicator i : {Indicator::OddsRatio, Indicator::VValue, Indicator::LL, Indicator::GLL}) {
    CHECK(verdict(Criterion::AC6, i) == Verdict::Satisfied);
    CHECK(verdict(Criterion::AC7, i) == Verdict::Satisfied);
  }
  for (Indicator i : {Indicator::Determinant, Indicator::Covariance, Indicator::Correlation}) {
    CHECK(verdict(Criterion::AC6, i) == Verdict::Satisfied);
    CHECK(verdict(Criterion::AC7, i) == Verdict::Counterexample);
  }
}

TEST_CASE("AC7 against an independent brute force") {
  // Among all 2x2 tables with total 8, the largest determinant is 16 (diag(4,4)),
  // while the PAM table for rows (2,6) and cols (5,3) has determinant 6.
  double best = -1e9;
  for (int a = 0; a <= 8; ++a)
    for (int b = 0; a + b <= 8; ++b)
      for (int c = 0; a + b + c <= 8; ++c) best = std::max(best, double(a * (8 - a - b - c) - b * c));
  CHECK(best == 16.0);
  auto pam = pam_match(Marginals::from({2, 6}, {5, 3}));
  CHECK(determinant(pam) == 6.0);
  Witness w;
  w.table = TableWithSingles(pam, {1, 1}, {1, 1});
  w.companion = TableWithSingles(t2(4, 0, 0, 4), {1, 1}, {1, 1});
  CHECK(indicator_violation(Criterion::AC7, Indicator::Determinant, w) == doctest::Approx(10.0 / 16.0));
  CHECK(indicator_violation(Criterion::AC7, Indicator::LL, w) == 0.0);
}

TEST_CASE("method rows") {
  auto o = quick();
  for (Method m : kAllMethods) {
    INFO(to_string(m));
    CHECK(check_method(Criterion::AC2, m, o).verdict == Verdict::Satisfied);
    CHECK(check_method(Criterion::AC3, m, o).verdict == Verdict::Satisfied);
    CHECK(check_method(Criterion::AC5, m, o).verdict == Verdict::Satisfied);
  }
  CHECK(check_method(Criterion::AC8_1, Method::IPF, o).verdict == Verdict::Satisfied);
  // MDbA keeps det * (T/N)^2, which inherits the covariance failure.
  Witness w;
  w.table = TableWithSingles(t2(18, 4, 10, 44), {1, 1}, {1, 1});
  w.diagonal = {1, 27};
  w.target = Marginals::from({60, 35}, {43, 52});
  CHECK(method_violation(Criterion::AC8_1, Method::MDbA, w) > kViolationThreshold);
  CHECK(method_violation(Criterion::AC8_1, Method::IPF, w) == 0.0);
  CHECK(check_method(Criterion::AC8_1, Method::MDbA).verdict == Verdict::Counterexample);
  CHECK(check_method(Criterion::AC10, Method::MEDA, o).verdict == Verdict::Counterexample);
  CHECK(check_method(Criterion::AC10, Method::CSA, o).verdict == Verdict::Counterexample);
  CHECK(check_method(Criterion::AC12, Method::MEDA, o).verdict == Verdict::Satisfied);
  CHECK(check_method(Criterion::AC12, Method::MDbA, o).verdict == Verdict::Satisfied);
}

TEST_CASE("cell symbols") {
  CriterionReport r;
  r.verdict = Verdict::Satisfied;
  CHECK(cell_symbol(r) == "Y");
  r.verdict = Verdict::Counterexample;
  CHECK(cell_symbol(r) == "N");
  r.verdict = Verdict::NotApplicable;
  CHECK(cell_symbol(r) == "NA");
  r.verdict = Verdict::NotAutomated;
  CHECK(cell_symbol(r) == "-");
  r.metadata = false;
  CHECK(cell_symbol(r) == "N");
}
