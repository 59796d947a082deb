#include "homlab/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "homlab/error.hpp"

namespace homlab {
namespace {

struct Cells {
  double a, b, c, d;
};

Cells cells_of(const ContingencyTable& t, const char* what) {
  if (!t.is_2x2()) throw ShapeError(std::string(what) + " is defined for 2x2 tables only");
  return {t(0, 0), t(0, 1), t(1, 0), t(1, 1)};
}

void require_positive_margins(const Cells& x, const char* what) {
  if (!(x.a + x.b > 0.0) || !(x.c + x.d > 0.0) || !(x.a + x.c > 0.0) || !(x.b + x.d > 0.0))
    throw UndefinedIndicator(std::string(what) + " undefined: a marginal sum is zero");
}

}  // namespace

double odds_ratio(const ContingencyTable& t) {
  auto x = cells_of(t, "odds ratio");
  double num = x.a * x.d;
  double den = x.b * x.c;
  if (den == 0.0) {
    if (num == 0.0) throw UndefinedIndicator("odds ratio undefined: ad = bc = 0");
    return std::numeric_limits<double>::infinity();
  }
  return num / den;
}

double determinant(const ContingencyTable& t) {
  auto x = cells_of(t, "determinant");
  return x.a * x.d - x.b * x.c;
}

double covariance(const ContingencyTable& t) {
  auto x = cells_of(t, "covariance");
  double n = x.a + x.b + x.c + x.d;
  if (!(n > 0.0)) throw UndefinedIndicator("covariance undefined on an empty table");
  return (x.a * x.d - x.b * x.c) / (n * n);
}

double correlation(const ContingencyTable& t) {
  auto x = cells_of(t, "correlation");
  require_positive_margins(x, "correlation");
  return (x.a * x.d - x.b * x.c) / std::sqrt((x.a + x.b) * (x.c + x.d) * (x.a + x.c) * (x.b + x.d));
}

RegressionPair regression(const ContingencyTable& t) {
  auto x = cells_of(t, "regression");
  require_positive_margins(x, "regression");
  double det = x.a * x.d - x.b * x.c;
  return {det / ((x.a + x.b) * (x.c + x.d)), det / ((x.a + x.c) * (x.b + x.d))};
}

double det_family(DetKind kind, const ContingencyTable& t) {
  switch (kind) {
    case DetKind::Determinant:
      return determinant(t);
    case DetKind::Covariance:
      return covariance(t);
    case DetKind::Correlation:
      return correlation(t);
  }
  return 0.0;
}

MspComponents aggregate_msp(const ContingencyTable& t) {
  auto x = cells_of(t, "aggregate MSP");
  require_positive_margins(x, "aggregate MSP");
  if (!(x.a + x.d > 0.0)) throw UndefinedIndicator("aggregate MSP undefined: a + d = 0");
  double n = x.a + x.b + x.c + x.d;
  MspComponents out;
  out.msp_L = x.a * n / ((x.a + x.b) * (x.a + x.c));
  out.msp_H = x.d * n / ((x.c + x.d) * (x.b + x.d));
  out.aggregate = (out.msp_L * x.a + out.msp_H * x.d) / (x.a + x.d);
  return out;
}

double v_value(const ContingencyTable& t) {
  auto x = cells_of(t, "V-value");
  // Tie b == c goes to the first branch.
  double A = x.b >= x.c ? (x.c + x.d) * (x.a + x.c) : (x.b + x.d) * (x.a + x.b);
  if (!(A > 0.0)) throw UndefinedIndicator("V-value undefined: branch denominator is zero");
  return (x.a * x.d - x.b * x.c) / A;
}

double integer_part(double x) {
  double r = std::round(x);
  if (std::fabs(x - r) <= 1e-9 * std::max(1.0, std::fabs(x))) return r;
  return std::floor(x);
}

LiuLuDecomposition ll_simplified(const ContingencyTable& t, Rounding rounding) {
  auto x = cells_of(t, "LL-indicator");
  double n = x.a + x.b + x.c + x.d;
  if (!(n > 0.0)) throw UndefinedIndicator("LL-indicator undefined on an empty table");
  LiuLuDecomposition out;
  out.R = (x.c + x.d) * (x.b + x.d) / n;
  out.intR = integer_part(out.R);
  out.d_obs = x.d;
  out.d_max = std::min(x.b + x.d, x.c + x.d);
  double base = rounding == Rounding::PaperInteger ? out.intR : out.R;
  double den = out.d_max - base;
  if (den == 0.0 || std::fabs(den) <= 1e-12 * std::max(1.0, n))
    throw UndefinedIndicator("LL-indicator undefined: min(b+d, c+d) - int(R) = 0");
  out.value = (x.d - base) / den;
  out.nonnegative_sorting = x.d >= out.R - 1e-12 * std::max(1.0, out.R);
  return out;
}

ContingencyTable aggregate_at(const ContingencyTable& t, AggregationSplit s) {
  if (s.j < 1 || s.j >= t.rows() || s.k < 1 || s.k >= t.cols())
    throw ShapeError("aggregation split out of range");
  Matrix out(2, 2);
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) out(r < s.j ? 0 : 1, c < s.k ? 0 : 1) += t(r, c);
  return ContingencyTable(std::move(out));
}

bool GllResult::fully_defined() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.has_value(); });
}

Matrix GllResult::values() const {
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& e = at(r, c);
      if (!e) throw UndefinedIndicator(errors[r * cols + c]);
      out(r, c) = *e;
    }
  }
  return out;
}

GllResult gll(const ContingencyTable& t, Rounding rounding) {
  GllResult out;
  out.rows = t.rows() - 1;
  out.cols = t.cols() - 1;
  out.entries.resize(out.rows * out.cols);
  out.errors.resize(out.rows * out.cols);
  for (std::size_t j = 1; j < t.rows(); ++j) {
    for (std::size_t k = 1; k < t.cols(); ++k) {
      std::size_t idx = (j - 1) * out.cols + (k - 1);
      try {
        out.entries[idx] = ll_simplified(aggregate_at(t, {j, k}), rounding).value;
      } catch (const UndefinedIndicator& e) {
        out.errors[idx] = "GLL entry (" + std::to_string(j) + "," + std::to_string(k) + "): " + e.what();
      }
    }
  }
  return out;
}

Matrix surplus_matrix(const TableWithSingles& t) {
  for (double v : t.single_men)
    if (!(v > 0.0)) throw UndefinedIndicator("surplus matrix undefined: a single-men count is zero");
  for (double v : t.single_women)
    if (!(v > 0.0)) throw UndefinedIndicator("surplus matrix undefined: a single-women count is zero");
  Matrix out(t.couples.rows(), t.couples.cols());
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c)
      out(r, c) = t.couples(r, c) / std::sqrt(t.single_men[r] * t.single_women[c]);
  return out;
}

}  // namespace homlab
