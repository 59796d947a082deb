#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "homlab/matrix.hpp"
#include "homlab/tables.hpp"

namespace homlab {

/// Odds ratio ad/bc of a 2x2 table; +infinity when only bc vanishes.
double odds_ratio(const ContingencyTable& t);

double determinant(const ContingencyTable& t);
/// det / total^2.
double covariance(const ContingencyTable& t);
double correlation(const ContingencyTable& t);

struct RegressionPair {
  double beta_wm = 0.0;  ///< wives' education regressed on husbands'
  double beta_mw = 0.0;  ///< husbands' education regressed on wives'
};
RegressionPair regression(const ContingencyTable& t);

enum class DetKind { Determinant, Covariance, Correlation };
double det_family(DetKind kind, const ContingencyTable& t);

/// Marital sorting parameters relative to random matching.
struct MspComponents {
  double msp_L = 0.0;
  double msp_H = 0.0;
  double aggregate = 0.0;
};
MspComponents aggregate_msp(const ContingencyTable& t);

/// V-value: det divided by (c+d)(a+c) when b >= c, otherwise by (b+d)(a+b).
double v_value(const ContingencyTable& t);

/// Integer part of a nonnegative expected count, snapping values that are
/// integers up to rounding noise.
double integer_part(double x);

struct LiuLuDecomposition {
  double R = 0.0;      ///< expected H,H count under random matching
  double intR = 0.0;   ///< floor(R)
  double d_obs = 0.0;  ///< observed H,H count
  double d_max = 0.0;  ///< min(b+d, c+d)
  double value = 0.0;
  /// d >= R; the simplified formula coincides with the original only then.
  bool nonnegative_sorting = true;
};

enum class Rounding { PaperInteger, Continuous };

/// Simplified Liu-Lu indicator (d - int(R)) / (min(b+d, c+d) - int(R)).
/// With Rounding::Continuous, int(R) is replaced by R.
LiuLuDecomposition ll_simplified(const ContingencyTable& t, Rounding rounding = Rounding::PaperInteger);

/// Row split after the first `j` categories and column split after the first `k`.
struct AggregationSplit {
  std::size_t j = 1;
  std::size_t k = 1;
};
/// 2x2 table summing rows [0,j) vs [j,n) and columns [0,k) vs [k,m).
ContingencyTable aggregate_at(const ContingencyTable& t, AggregationSplit s);

/// Generalized LL matrix: entry (j-1,k-1) is the LL value of the split (j,k).
/// Entries are independent; an undefined entry carries its own error message.
struct GllResult {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::optional<double>> entries;
  std::vector<std::string> errors;

  const std::optional<double>& at(std::size_t r, std::size_t c) const { return entries[r * cols + c]; }
  bool fully_defined() const;
  /// Throws UndefinedIndicator naming the first undefined split.
  Matrix values() const;
};
GllResult gll(const ContingencyTable& t, Rounding rounding = Rounding::PaperInteger);

/// Choo-Siow marital surplus matrix: couples / sqrt(single men * single women).
Matrix surplus_matrix(const TableWithSingles& t);

}  // namespace homlab
