#include "homlab/counterfactual.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "homlab/error.hpp"

namespace homlab {
namespace {

constexpr double kNegativeCellTol = 1e-9;

void require_compatible(const ContingencyTable& source, const Marginals& target) {
  if (source.rows() != target.row_sums.size() || source.cols() != target.col_sums.size())
    throw ShapeError("source table and target margins have different dimensions");
  if (!(target.total > 0.0)) throw DegenerateInput("target margins have zero total");
}

/// Snaps round-off negatives to zero; anything below the tolerance is an
/// impossible counterfactual.
Matrix checked_cells(Matrix cells, Method method, const std::string& detail = {}) {
  for (std::size_t r = 0; r < cells.rows(); ++r) {
    for (std::size_t c = 0; c < cells.cols(); ++c) {
      double v = cells(r, c);
      if (v < -kNegativeCellTol) {
        throw InfeasibleError(std::string(to_string(method)) + " counterfactual needs a negative cell (" +
                                  std::to_string(r + 1) + "," + std::to_string(c + 1) + ") = " +
                                  std::to_string(v) + detail,
                              static_cast<long>(r), static_cast<long>(c), v);
      }
      if (v < 0.0) cells(r, c) = 0.0;
    }
  }
  return cells;
}

ContingencyTable relabeled(Matrix cells, const ContingencyTable& like) {
  return ContingencyTable(std::move(cells), like.row_labels(), like.col_labels());
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::IPF:
      return "IPF";
    case Method::MDbA:
      return "MDbA";
    case Method::MEDA:
      return "MEDA";
    case Method::CSA:
      return "CSA";
    case Method::NM:
      return "NM";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  std::string lower;
  for (char ch : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (lower == "ipf") return Method::IPF;
  if (lower == "mdba") return Method::MDbA;
  if (lower == "meda") return Method::MEDA;
  if (lower == "csa" || lower == "cs") return Method::CSA;
  if (lower == "nm") return Method::NM;
  throw ValidationError("unknown method '" + std::string(s) + "'");
}

double marginal_error(const ContingencyTable& t, const Marginals& target) {
  auto m = marginals(t);
  double worst = 0.0;
  for (std::size_t r = 0; r < m.row_sums.size(); ++r)
    worst = std::max(worst, std::fabs(m.row_sums[r] - target.row_sums[r]));
  for (std::size_t c = 0; c < m.col_sums.size(); ++c)
    worst = std::max(worst, std::fabs(m.col_sums[c] - target.col_sums[c]));
  return worst;
}

SurvivalGrid::SurvivalGrid(const ContingencyTable& t) : values_(t.rows() + 1, t.cols() + 1) {
  for (std::size_t j = t.rows(); j-- > 0;)
    for (std::size_t k = t.cols(); k-- > 0;)
      values_(j, k) = t(j, k) + values_(j + 1, k) + values_(j, k + 1) - values_(j + 1, k + 1);
}

double SurvivalGrid::cell(std::size_t i, std::size_t l) const {
  return values_(i, l) - values_(i + 1, l) - values_(i, l + 1) + values_(i + 1, l + 1);
}

Matrix SurvivalGrid::cells() const {
  Matrix out(table_rows(), table_cols());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t l = 0; l < out.cols(); ++l) out(i, l) = cell(i, l);
  return out;
}

CounterfactualResult ipf_fit(const ContingencyTable& source, const Marginals& target, IpfOptions opts) {
  require_compatible(source, target);
  auto src = marginals(source);
  for (std::size_t r = 0; r < source.rows(); ++r)
    if (src.row_sums[r] <= 0.0 && target.row_sums[r] > 0.0)
      throw InfeasibleError("IPF: source row " + std::to_string(r + 1) + " is empty but its target is positive",
                            static_cast<long>(r), -1);
  for (std::size_t c = 0; c < source.cols(); ++c)
    if (src.col_sums[c] <= 0.0 && target.col_sums[c] > 0.0)
      throw InfeasibleError("IPF: source column " + std::to_string(c + 1) + " is empty but its target is positive",
                            -1, static_cast<long>(c));

  Matrix q = source.counts();
  const std::size_t n = q.rows(), m = q.cols();
  const double tol = opts.tol * std::max(1.0, target.total);
  double err = 0.0;
  for (long it = 1; it <= opts.max_iter; ++it) {
    for (std::size_t r = 0; r < n; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < m; ++c) s += q(r, c);
      double f = s > 0.0 ? target.row_sums[r] / s : 0.0;
      for (std::size_t c = 0; c < m; ++c) q(r, c) *= f;
    }
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += q(r, c);
      double f = s > 0.0 ? target.col_sums[c] / s : 0.0;
      for (std::size_t r = 0; r < n; ++r) q(r, c) *= f;
    }
    ContingencyTable t = relabeled(q, source);
    err = marginal_error(t, target);
    if (err <= tol) {
      CounterfactualResult out{std::move(t), Method::IPF, it, err, true, {}, {}, {}};
      out.diagnostics["tolerance"] = tol;
      return out;
    }
  }
  throw ConvergenceError("IPF did not converge in " + std::to_string(opts.max_iter) +
                         " iterations (marginal error " + std::to_string(err) + ")");
}

CounterfactualResult mdba_fit(const ContingencyTable& source, const Marginals& target) {
  if (!source.is_2x2() || target.row_sums.size() != 2 || target.col_sums.size() != 2)
    throw ShapeError("MDbA needs a dichotomous trait on both sides (2x2)");
  require_compatible(source, target);
  double ns = source.total();
  if (!(ns > 0.0)) throw DegenerateInput("MDbA: empty source table");
  const double T = target.total;
  const double det_target = determinant(source) * (T / ns) * (T / ns);
  const double row_high = target.row_sums[1];
  const double col_high = target.col_sums[1];
  // With fixed margins det = T*d - row_high*col_high, affine in d.
  const double d = (det_target + row_high * col_high) / T;
  Matrix cells{{T - row_high - col_high + d, col_high - d}, {row_high - d, d}};
  CounterfactualResult out{relabeled(checked_cells(std::move(cells), Method::MDbA), source), Method::MDbA,
                           0, 0.0, true, {}, {}, {}};
  out.max_marginal_error = marginal_error(out.table, target);
  out.diagnostics["det_target"] = det_target;
  return out;
}

double meda_weight(const ContingencyTable& source) {
  auto m = marginals(source);
  Matrix rnd = random_match(m).counts();
  Matrix pam = pam_match(m).counts();
  Matrix dir = pam - rnd;
  Matrix off = source.counts() - rnd;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < dir.data().size(); ++i) {
    num += off.data()[i] * dir.data()[i];
    den += dir.data()[i] * dir.data()[i];
  }
  if (den <= 1e-24 * m.total * m.total)
    throw UndefinedWeight("MEDA weight undefined: PAM and random matching coincide at these margins");
  return num / den;
}

CounterfactualResult meda_fit(const ContingencyTable& source, const Marginals& target) {
  require_compatible(source, target);
  const double v = meda_weight(source);
  Matrix cells = random_match(target).counts() * (1.0 - v) + pam_match(target).counts() * v;
  CounterfactualResult out{relabeled(checked_cells(std::move(cells), Method::MEDA,
                                                   " (unclamped weight v = " + std::to_string(v) + ")"),
                                     source),
                           Method::MEDA, 0, 0.0, true, {}, {}, {}};
  out.max_marginal_error = marginal_error(out.table, target);
  out.diagnostics["v"] = v;
  return out;
}

CounterfactualResult nm_fit(const ContingencyTable& source, const Marginals& target, Rounding rounding) {
  require_compatible(source, target);
  const Matrix ll = gll(source, rounding).values();
  const std::size_t n = source.rows(), m = source.cols();
  const double T = target.total;

  SurvivalGrid grid(n, m);
  for (std::size_t j = n; j-- > 0;) grid(j, 0) = grid(j + 1, 0) + target.row_sums[j];
  for (std::size_t k = m; k-- > 0;) grid(0, k) = grid(0, k + 1) + target.col_sums[k];
  grid(0, 0) = T;
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t k = 1; k < m; ++k) {
      const double row_high = grid(j, 0);
      const double col_high = grid(0, k);
      const double R = row_high * col_high / T;
      const double base = rounding == Rounding::PaperInteger ? integer_part(R) : R;
      grid(j, k) = ll(j - 1, k - 1) * (std::min(row_high, col_high) - base) + base;
    }
  }
  CounterfactualResult out{relabeled(checked_cells(grid.cells(), Method::NM), source), Method::NM, 0, 0.0, true,
                           {}, {}, {}};
  out.max_marginal_error = marginal_error(out.table, target);
  out.diagnostics["rounding"] = rounding == Rounding::PaperInteger ? 0.0 : 1.0;
  return out;
}

CounterfactualResult csa_fit(const TableWithSingles& source, const std::vector<double>& target_men,
                             const std::vector<double>& target_women, CsaOptions opts) {
  const Matrix msm = surplus_matrix(source);
  const std::size_t n = msm.rows(), m = msm.cols();
  if (target_men.size() != n || target_women.size() != m)
    throw ShapeError("CSA target populations do not match the table dimensions");
  double scale = 1.0;
  for (double v : target_men) {
    if (!(v > 0.0)) throw InfeasibleError("CSA target populations must be strictly positive");
    scale = std::max(scale, v);
  }
  for (double v : target_women) {
    if (!(v > 0.0)) throw InfeasibleError("CSA target populations must be strictly positive");
    scale = std::max(scale, v);
  }

  // x = sqrt(single men), y = sqrt(single women); couples = msm * x * y.
  std::vector<double> x(n), y(m);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sqrt(target_men[i]);
  for (std::size_t j = 0; j < m; ++j) y[j] = std::sqrt(target_women[j]);

  // Positive root of s^2 + B s - P = 0, written to avoid cancellation.
  auto root = [](double B, double P) { return 2.0 * P / (B + std::sqrt(B * B + 4.0 * P)); };
  auto damp = [&](double old_v, double new_v) {
    return std::exp((1.0 - opts.damping) * std::log(old_v) + opts.damping * std::log(new_v));
  };

  const double tol = opts.tol * scale;
  double err = 0.0;
  for (long it = 1; it <= opts.max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double B = 0.0;
      for (std::size_t j = 0; j < m; ++j) B += msm(i, j) * y[j];
      x[i] = damp(x[i], root(B, target_men[i]));
    }
    for (std::size_t j = 0; j < m; ++j) {
      double B = 0.0;
      for (std::size_t i = 0; i < n; ++i) B += msm(i, j) * x[i];
      y[j] = damp(y[j], root(B, target_women[j]));
    }
    for (double v : x)
      if (!std::isfinite(v) || !(v > 0.0)) throw InfeasibleError("CSA iterate left the positive orthant");
    for (double v : y)
      if (!std::isfinite(v) || !(v > 0.0)) throw InfeasibleError("CSA iterate left the positive orthant");

    err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = x[i] * x[i];
      for (std::size_t j = 0; j < m; ++j) s += msm(i, j) * x[i] * y[j];
      err = std::max(err, std::fabs(s - target_men[i]));
    }
    for (std::size_t j = 0; j < m; ++j) {
      double s = y[j] * y[j];
      for (std::size_t i = 0; i < n; ++i) s += msm(i, j) * x[i] * y[j];
      err = std::max(err, std::fabs(s - target_women[j]));
    }
    if (err <= tol) {
      Matrix mu(n, m);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) mu(i, j) = msm(i, j) * x[i] * y[j];
      CounterfactualResult out{relabeled(std::move(mu), source.couples), Method::CSA, it, err, true, {}, {}, {}};
      for (double v : x) out.single_men.push_back(v * v);
      for (double v : y) out.single_women.push_back(v * v);
      out.diagnostics["damping"] = opts.damping;
      return out;
    }
  }
  throw ConvergenceError("CSA fixed point did not converge in " + std::to_string(opts.max_iter) +
                         " iterations (residual " + std::to_string(err) + ")");
}

CounterfactualResult fit(Method method, const ContingencyTable& source, const Marginals& target,
                         const FitOptions& opts) {
  switch (method) {
    case Method::IPF:
      return ipf_fit(source, target, opts.ipf);
    case Method::MDbA:
      return mdba_fit(source, target);
    case Method::MEDA:
      return meda_fit(source, target);
    case Method::NM:
      return nm_fit(source, target, opts.rounding);
    case Method::CSA:
      throw ValidationError("CSA needs single men and women; use csa_fit with a TableWithSingles");
  }
  throw ValidationError("unknown method");
}

}  // namespace homlab
