#include "homlab/tables.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "homlab/error.hpp"

namespace homlab {
namespace {

std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i + 1));
  return out;
}

void check_labels(const std::vector<std::string>& labels, std::size_t expected, const char* which) {
  if (labels.size() != expected)
    throw ShapeError(std::string(which) + " label count does not match table dimension");
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size()) throw ValidationError(std::string("duplicate ") + which + " label");
}

bool near_integer(double x) { return std::fabs(x - std::round(x)) <= 1e-9 * std::max(1.0, std::fabs(x)); }

void validate_partition(const Partition& p, std::size_t n, const char* which) {
  std::size_t next = 0;
  for (const auto& block : p) {
    if (block.empty()) throw InvalidPartition(std::string(which) + " partition has an empty block");
    for (std::size_t idx : block) {
      if (idx != next)
        throw InvalidPartition(std::string(which) +
                               " partition is not contiguous, ordered and covering");
      ++next;
    }
  }
  if (next != n) throw InvalidPartition(std::string(which) + " partition does not cover all categories");
  if (p.size() < 2) throw InvalidPartition(std::string(which) + " partition leaves fewer than 2 categories");
}

std::vector<double> merge_vector(const std::vector<double>& v, const Partition& p) {
  std::vector<double> out;
  out.reserve(p.size());
  for (const auto& block : p) {
    double s = 0.0;
    for (std::size_t idx : block) s += v[idx];
    out.push_back(s);
  }
  return out;
}

std::vector<std::string> merge_labels(const std::vector<std::string>& labels, const Partition& p) {
  std::vector<std::string> out;
  for (const auto& block : p) {
    std::string name = labels[block.front()];
    if (block.size() > 1) name += ".." + labels[block.back()];
    out.push_back(std::move(name));
  }
  return out;
}

void require_positive_total(const Marginals& m) {
  if (!(m.total > 0.0)) throw DegenerateInput("marginals have zero total");
}

}  // namespace

ContingencyTable::ContingencyTable(Matrix counts)
    : ContingencyTable(counts, default_labels(counts.rows()), default_labels(counts.cols())) {}

ContingencyTable::ContingencyTable(Matrix counts, std::vector<std::string> row_labels,
                                   std::vector<std::string> col_labels)
    : counts_(std::move(counts)), row_labels_(std::move(row_labels)), col_labels_(std::move(col_labels)) {
  if (counts_.rows() < 2 || counts_.cols() < 2) throw ShapeError("contingency table must be at least 2x2");
  check_labels(row_labels_, counts_.rows(), "row");
  check_labels(col_labels_, counts_.cols(), "column");
  for (double v : counts_.data()) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("contingency table counts must be finite and >= 0");
  }
}

bool ContingencyTable::is_integral() const {
  return std::all_of(counts_.data().begin(), counts_.data().end(), near_integer);
}

ContingencyTable ContingencyTable::transposed() const {
  return ContingencyTable(counts_.transposed(), col_labels_, row_labels_);
}

ContingencyTable ContingencyTable::scaled(double r) const {
  return ContingencyTable(counts_ * r, row_labels_, col_labels_);
}

Marginals Marginals::from(std::vector<double> rows, std::vector<double> cols) {
  double rt = 0.0, ct = 0.0;
  for (double v : rows) {
    if (!(v >= 0.0)) throw ValidationError("negative row margin");
    rt += v;
  }
  for (double v : cols) {
    if (!(v >= 0.0)) throw ValidationError("negative column margin");
    ct += v;
  }
  if (std::fabs(rt - ct) > 1e-9 * std::max(1.0, std::max(rt, ct)))
    throw ValidationError("row and column margins have different totals");
  return Marginals{std::move(rows), std::move(cols), rt};
}

Marginals Marginals::scaled(double r) const {
  Marginals out = *this;
  for (double& v : out.row_sums) v *= r;
  for (double& v : out.col_sums) v *= r;
  out.total *= r;
  return out;
}

TableWithSingles::TableWithSingles(ContingencyTable c, std::vector<double> men, std::vector<double> women)
    : couples(std::move(c)), single_men(std::move(men)), single_women(std::move(women)) {
  if (single_men.size() != couples.rows() || single_women.size() != couples.cols())
    throw ShapeError("singles vectors do not match the couple table dimensions");
  for (double v : single_men)
    if (!(v >= 0.0)) throw ValidationError("negative single-men count");
  for (double v : single_women)
    if (!(v >= 0.0)) throw ValidationError("negative single-women count");
}

std::vector<double> TableWithSingles::men_population() const {
  auto m = marginals(couples);
  for (std::size_t i = 0; i < m.row_sums.size(); ++i) m.row_sums[i] += single_men[i];
  return m.row_sums;
}

std::vector<double> TableWithSingles::women_population() const {
  auto m = marginals(couples);
  for (std::size_t j = 0; j < m.col_sums.size(); ++j) m.col_sums[j] += single_women[j];
  return m.col_sums;
}

TableWithSingles TableWithSingles::transposed() const {
  return TableWithSingles(couples.transposed(), single_women, single_men);
}

TableWithSingles TableWithSingles::scaled(double r) const {
  auto men = single_men;
  auto women = single_women;
  for (double& v : men) v *= r;
  for (double& v : women) v *= r;
  return TableWithSingles(couples.scaled(r), std::move(men), std::move(women));
}

Partition partition_from_sizes(const std::vector<std::size_t>& sizes) {
  Partition p;
  std::size_t next = 0;
  for (std::size_t s : sizes) {
    std::vector<std::size_t> block;
    for (std::size_t k = 0; k < s; ++k) block.push_back(next++);
    p.push_back(std::move(block));
  }
  return p;
}

Partition identity_partition(std::size_t n) { return partition_from_sizes(std::vector<std::size_t>(n, 1)); }

Marginals marginals(const ContingencyTable& t) {
  Marginals m;
  m.row_sums.assign(t.rows(), 0.0);
  m.col_sums.assign(t.cols(), 0.0);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.cols(); ++c) {
      m.row_sums[r] += t(r, c);
      m.col_sums[c] += t(r, c);
      m.total += t(r, c);
    }
  }
  return m;
}

ContingencyTable merge_categories(const ContingencyTable& t, const Partition& row_partition,
                                  const Partition& col_partition) {
  validate_partition(row_partition, t.rows(), "row");
  validate_partition(col_partition, t.cols(), "column");
  Matrix out(row_partition.size(), col_partition.size());
  for (std::size_t R = 0; R < row_partition.size(); ++R)
    for (std::size_t C = 0; C < col_partition.size(); ++C)
      for (std::size_t r : row_partition[R])
        for (std::size_t c : col_partition[C]) out(R, C) += t(r, c);
  return ContingencyTable(std::move(out), merge_labels(t.row_labels(), row_partition),
                          merge_labels(t.col_labels(), col_partition));
}

Marginals merge_marginals(const Marginals& m, const Partition& row_partition, const Partition& col_partition) {
  validate_partition(row_partition, m.row_sums.size(), "row");
  validate_partition(col_partition, m.col_sums.size(), "column");
  return Marginals{merge_vector(m.row_sums, row_partition), merge_vector(m.col_sums, col_partition), m.total};
}

TableWithSingles merge_categories(const TableWithSingles& t, const Partition& row_partition,
                                  const Partition& col_partition) {
  return TableWithSingles(merge_categories(t.couples, row_partition, col_partition),
                          merge_vector(t.single_men, row_partition), merge_vector(t.single_women, col_partition));
}

ContingencyTable random_match(const Marginals& m) {
  require_positive_total(m);
  Matrix out(m.row_sums.size(), m.col_sums.size());
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = m.row_sums[r] * m.col_sums[c] / m.total;
  return ContingencyTable(std::move(out));
}

ContingencyTable pam_match(const Marginals& m) {
  require_positive_total(m);
  auto rows = m.row_sums;
  auto cols = m.col_sums;
  Matrix out(rows.size(), cols.size());
  // Walk both category lists from the top; each step exhausts one side.
  long r = static_cast<long>(rows.size()) - 1;
  long c = static_cast<long>(cols.size()) - 1;
  while (r >= 0 && c >= 0) {
    if (rows[r] <= 0.0) {
      --r;
      continue;
    }
    if (cols[c] <= 0.0) {
      --c;
      continue;
    }
    double k = std::min(rows[r], cols[c]);
    out(r, c) += k;
    rows[r] -= k;
    cols[c] -= k;
    if (rows[r] <= 1e-12 * m.total) rows[r] = 0.0;
    if (cols[c] <= 1e-12 * m.total) cols[c] = 0.0;
  }
  return ContingencyTable(std::move(out));
}

double homogamy_share(const ContingencyTable& t) {
  if (!t.is_square()) throw ShapeError("homogamy share needs a square table");
  double total = t.total();
  if (!(total > 0.0)) throw DegenerateInput("homogamy share of an empty table");
  double diag = 0.0;
  for (std::size_t i = 0; i < t.rows(); ++i) diag += t(i, i);
  return diag / total;
}

namespace {

struct Enumerator {
  std::size_t n, m;
  std::vector<long> row_rem, col_rem;
  Matrix cur;
  std::vector<ContingencyTable> out;

  void fill(std::size_t r, std::size_t c) {
    if (r == n - 1) {
      // Last row is forced by the column remainders.
      long row_left = row_rem[r];
      for (std::size_t k = 0; k < m; ++k) row_left -= col_rem[k];
      if (row_left != 0) return;
      Matrix t = cur;
      for (std::size_t k = 0; k < m; ++k) t(r, k) = static_cast<double>(col_rem[k]);
      out.emplace_back(std::move(t));
      return;
    }
    if (c == m - 1) {
      long v = row_rem[r];
      if (v > col_rem[c]) return;
      cur(r, c) = static_cast<double>(v);
      row_rem[r] -= v;
      col_rem[c] -= v;
      fill(r + 1, 0);
      row_rem[r] += v;
      col_rem[c] += v;
      cur(r, c) = 0.0;
      return;
    }
    long hi = std::min(row_rem[r], col_rem[c]);
    for (long v = 0; v <= hi; ++v) {
      cur(r, c) = static_cast<double>(v);
      row_rem[r] -= v;
      col_rem[c] -= v;
      fill(r, c + 1);
      row_rem[r] += v;
      col_rem[c] += v;
    }
    cur(r, c) = 0.0;
  }
};

std::vector<long> to_integers(const std::vector<double>& v) {
  std::vector<long> out;
  for (double x : v) {
    if (!near_integer(x) || x < 0.0) throw ValidationError("enumeration needs nonnegative integer margins");
    out.push_back(std::lround(x));
  }
  return out;
}

}  // namespace

std::vector<ContingencyTable> enumerate_tables(const Marginals& m, long cap) {
  auto rows = to_integers(m.row_sums);
  auto cols = to_integers(m.col_sums);
  long rt = 0, ct = 0;
  for (long v : rows) rt += v;
  for (long v : cols) ct += v;
  if (rt != ct) throw ValidationError("enumeration margins have different totals");
  if (rt > cap) throw ResourceGuard("enumeration total " + std::to_string(rt) + " exceeds cap " + std::to_string(cap));
  if (rows.size() < 2 || cols.size() < 2) throw ShapeError("enumeration needs at least 2x2 margins");
  Enumerator e{rows.size(), cols.size(), rows, cols, Matrix(rows.size(), cols.size()), {}};
  e.fill(0, 0);
  return std::move(e.out);
}

}  // namespace homlab
