#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "homlab/matrix.hpp"

namespace homlab {

/// Couple counts cross-classified by husband education (rows) and wife
/// education (columns). Categories are ordered low to high.
///
/// Counts are nonnegative reals so that counterfactual tables, which are
/// generally non-integer, share the type with observed ones.
class ContingencyTable {
 public:
  ContingencyTable() = default;
  /// Labels default to "1".."n" / "1".."m".
  explicit ContingencyTable(Matrix counts);
  ContingencyTable(Matrix counts, std::vector<std::string> row_labels,
                   std::vector<std::string> col_labels);

  const Matrix& counts() const { return counts_; }
  std::size_t rows() const { return counts_.rows(); }
  std::size_t cols() const { return counts_.cols(); }
  double operator()(std::size_t r, std::size_t c) const { return counts_(r, c); }
  double total() const { return counts_.sum(); }

  const std::vector<std::string>& row_labels() const { return row_labels_; }
  const std::vector<std::string>& col_labels() const { return col_labels_; }

  bool is_square() const { return rows() == cols(); }
  bool is_2x2() const { return rows() == 2 && cols() == 2; }
  /// True when every cell is a whole number (within 1e-9).
  bool is_integral() const;

  ContingencyTable transposed() const;
  ContingencyTable scaled(double r) const;

 private:
  Matrix counts_;
  std::vector<std::string> row_labels_;
  std::vector<std::string> col_labels_;
};

/// Row sums, column sums and grand total: the structural factor.
struct Marginals {
  std::vector<double> row_sums;
  std::vector<double> col_sums;
  double total = 0.0;

  /// Throws ValidationError if the two margins disagree on the total
  /// (relative 1e-9) or contain negative entries.
  static Marginals from(std::vector<double> rows, std::vector<double> cols);
  Marginals scaled(double r) const;
  Marginals transposed() const { return Marginals{col_sums, row_sums, total}; }
};

/// A couple table together with per-category single men and single women.
struct TableWithSingles {
  ContingencyTable couples;
  std::vector<double> single_men;
  std::vector<double> single_women;

  TableWithSingles() = default;
  TableWithSingles(ContingencyTable couples, std::vector<double> single_men,
                   std::vector<double> single_women);

  /// Men per category (married + single).
  std::vector<double> men_population() const;
  std::vector<double> women_population() const;
  TableWithSingles transposed() const;
  TableWithSingles scaled(double r) const;
};

/// Contiguous, order-preserving grouping of categories: each inner vector is
/// one block of consecutive zero-based category indices.
using Partition = std::vector<std::vector<std::size_t>>;

/// Builds a partition from block sizes, e.g. {1, 2} -> {{0}, {1, 2}}.
Partition partition_from_sizes(const std::vector<std::size_t>& sizes);
Partition identity_partition(std::size_t n);

Marginals marginals(const ContingencyTable& t);

ContingencyTable merge_categories(const ContingencyTable& t, const Partition& row_partition,
                                  const Partition& col_partition);
Marginals merge_marginals(const Marginals& m, const Partition& row_partition,
                          const Partition& col_partition);
TableWithSingles merge_categories(const TableWithSingles& t, const Partition& row_partition,
                                  const Partition& col_partition);

/// Expected table under random matching with the given margins.
ContingencyTable random_match(const Marginals& m);

/// Perfectly assortative matching: the highest unexhausted husband category is
/// always paired with the highest unexhausted wife category.
ContingencyTable pam_match(const Marginals& m);

/// Share of couples on the main diagonal. Requires a square table.
double homogamy_share(const ContingencyTable& t);

inline constexpr long kDefaultEnumerationCap = 40;

/// Every nonnegative integer table with the given (integer) margins, i.e. the
/// lattice points of the transportation polytope. Brute force; guarded by `cap`
/// on the grand total.
std::vector<ContingencyTable> enumerate_tables(const Marginals& m,
                                               long cap = kDefaultEnumerationCap);

}  // namespace homlab
