#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "homlab/indicators.hpp"
#include "homlab/matrix.hpp"
#include "homlab/tables.hpp"

namespace homlab {

enum class Method { IPF, MDbA, MEDA, CSA, NM };

std::string_view to_string(Method m);
/// Accepts "ipf", "mdba", "meda", "csa", "nm" (case-insensitive).
Method parse_method(std::string_view s);

/// A table with one generation's margins and another's association factor.
struct CounterfactualResult {
  ContingencyTable table;
  Method method = Method::IPF;
  long iterations = 0;
  /// Max absolute deviation from the target margins (CSA: population identities).
  double max_marginal_error = 0.0;
  bool feasible = true;
  /// Method-specific numbers, e.g. "v" for MEDA or "rounding" for NM.
  std::map<std::string, double> diagnostics;
  /// CSA only: equilibrium singles.
  std::vector<double> single_men;
  std::vector<double> single_women;
};

/// Cumulative sums from the bottom-right corner: S(j,k) = sum of cells with
/// row >= j and column >= k (zero-based), with S(n,.) = S(.,m) = 0.
class SurvivalGrid {
 public:
  explicit SurvivalGrid(const ContingencyTable& t);
  SurvivalGrid(std::size_t rows, std::size_t cols) : values_(rows + 1, cols + 1) {}

  double operator()(std::size_t j, std::size_t k) const { return values_(j, k); }
  double& operator()(std::size_t j, std::size_t k) { return values_(j, k); }
  std::size_t table_rows() const { return values_.rows() - 1; }
  std::size_t table_cols() const { return values_.cols() - 1; }

  /// Inclusion-exclusion recovery of cell (i,l).
  double cell(std::size_t i, std::size_t l) const;
  Matrix cells() const;

 private:
  Matrix values_;
};

struct IpfOptions {
  double tol = 1e-10;
  long max_iter = 10000;
};

/// Iterative proportional fitting: alternate row and column scaling of the
/// source until its margins equal the target. Zero cells stay zero.
CounterfactualResult ipf_fit(const ContingencyTable& source, const Marginals& target,
                             IpfOptions opts = {});

/// 2x2 only: fixes the determinant of the source rescaled to the target total.
CounterfactualResult mdba_fit(const ContingencyTable& source, const Marginals& target);

/// Least-squares weight of the source on the segment between random matching
/// and perfectly assortative matching at the source's own margins.
double meda_weight(const ContingencyTable& source);
/// Applies the source's weight to the random/PAM endpoints of the target.
CounterfactualResult meda_fit(const ContingencyTable& source, const Marginals& target);

/// Keeps every entry of the generalized LL matrix of the source.
CounterfactualResult nm_fit(const ContingencyTable& source, const Marginals& target,
                            Rounding rounding = Rounding::PaperInteger);

struct CsaOptions {
  double tol = 1e-10;
  long max_iter = 100000;
  double damping = 0.5;
};

/// Reduced-form Choo-Siow: keeps the marital surplus matrix and solves for the
/// couples and singles that exhaust the target populations.
CounterfactualResult csa_fit(const TableWithSingles& source, const std::vector<double>& target_men,
                             const std::vector<double>& target_women, CsaOptions opts = {});

/// Shared knobs for `fit`.
struct FitOptions {
  Rounding rounding = Rounding::PaperInteger;
  IpfOptions ipf;
  CsaOptions csa;
};

/// Dispatches IPF, MDbA, MEDA and NM. CSA needs singles and goes through csa_fit.
CounterfactualResult fit(Method method, const ContingencyTable& source, const Marginals& target,
                         const FitOptions& opts = {});

/// Largest absolute deviation of the table's margins from `target`.
double marginal_error(const ContingencyTable& t, const Marginals& target);

}  // namespace homlab
