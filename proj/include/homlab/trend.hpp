#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "homlab/decomposition.hpp"
#include "homlab/tables.hpp"

namespace homlab {

/// Decade labels are the starting census year: 1960 stands for the 1960s.
inline constexpr int kFirstDecade = 1960;
inline constexpr int kLastDecade = 2000;

/// Signed change of one state across one inter-census decade.
struct DecadeChange {
  std::string state;
  int decade = kFirstDecade;
  double delta = 0.0;
  bool valid = true;
  std::string reason;  ///< why the pair is invalid; empty when valid
};

/// Expected sign of a U-shaped trend: -1 for the 1960s to 1980s, +1 after.
int u_shape_sign(int decade);
std::string decade_label(int decade);

struct PairFlag {
  std::string state;
  int decade = kFirstDecade;
  bool consistent = false;
};

/// One flag per valid change; zero deltas are inconsistent.
std::vector<PairFlag> classify_u_shape(const std::vector<DecadeChange>& changes);

/// Per (state, decade) change of the top-10% income share.
using IncomeDeltas = std::map<std::pair<std::string, int>, double>;

struct IncomeLevel {
  std::string state;
  int year = 0;
  double top10_share = 0.0;
};
/// Decade deltas from consecutive census-year levels (year and year + 10).
IncomeDeltas income_deltas(const std::vector<IncomeLevel>& levels);

struct IncomeFlag {
  std::string state;
  int decade = kFirstDecade;
  std::optional<bool> consistent;  ///< empty when the pair is excluded
  std::string reason;
};
/// Sign agreement between each valid change and the income delta.
std::vector<IncomeFlag> income_consistency(const std::vector<DecadeChange>& changes, const IncomeDeltas& income);

/// State names up to and including the boundary form the first half.
inline constexpr const char* kDefaultSplitBoundary = "Mississippi";
bool in_first_half(const std::string& state, const std::string& boundary = kDefaultSplitBoundary);

struct TrendStats {
  long n_U = 0;
  long n_s = 0;
  long n_alpha = 0;
  long n_omega = 0;
  long N = 0;
  long N_alpha = 0;
  long N_omega = 0;
  /// Valid pairs without an income delta; they never count towards n_s.
  long income_excluded = 0;

  std::optional<double> ratio_U() const;
  std::optional<double> ratio_s() const;
  std::optional<double> ratio_alpha() const;
  std::optional<double> ratio_omega() const;
};

/// N counts valid pairs only. Result is independent of input order.
TrendStats score(const std::vector<DecadeChange>& changes, const IncomeDeltas& income,
                 const std::string& boundary = kDefaultSplitBoundary);

/// Signed change between two consecutive waves; throws when undefined.
using ChangeMeasure = std::function<double(const ContingencyTable& early, const ContingencyTable& late)>;

/// Changes of one state over consecutive waves ten years apart. A pair is
/// valid iff both waves exist and the measure succeeds on them.
std::vector<DecadeChange> decade_changes(const std::string& state, const std::vector<Wave>& waves,
                                         const ChangeMeasure& measure);

}  // namespace homlab
