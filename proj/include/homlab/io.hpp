#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "homlab/counterfactual.hpp"
#include "homlab/decomposition.hpp"
#include "homlab/tables.hpp"
#include "homlab/trend.hpp"

namespace homlab {

/// Dichotomizations of a three-level trait.
enum class CategoryScheme { Three, HighSchool, College };
std::string_view to_string(CategoryScheme s);
/// Accepts "three", "hs" and "college".
CategoryScheme parse_category_scheme(std::string_view s);
/// Merge applied to an n-level trait; HighSchool and College need n = 3.
Partition category_partition(CategoryScheme s, std::size_t n);

/// State code for couples assigned to no state.
inline constexpr const char* kUnknownState = "UNKNOWN";
/// Name under which the national aggregate is reported.
inline constexpr const char* kNationalState = "National";

struct RunConfig {
  std::vector<int> waves{1960, 1970, 1980, 1990, 2000, 2010};
  /// Ordered low to high; CSV education labels must come from this list.
  std::vector<std::string> categories{"1", "2", "3"};
  CategoryScheme category_scheme = CategoryScheme::Three;
  Method method = Method::NM;
  /// Unset means the method's default scheme.
  std::optional<Scheme> scheme;
  Rounding rounding = Rounding::PaperInteger;
  IpfOptions ipf;
  CsaOptions csa;
  std::uint64_t seed = 20240611;
  long samples = 500;
  bool include_unknown = false;
  std::string split_boundary = kDefaultSplitBoundary;

  Scheme effective_scheme() const { return scheme.value_or(default_scheme(method)); }
  FitOptions fit_options() const;
};

/// Reads a JSON config; absent keys keep their defaults, unknown keys are rejected.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& c);

/// Couple tables per state and census year, all with the configured categories.
struct PanelDataset {
  std::vector<std::string> categories;
  std::vector<int> years;
  std::map<std::string, std::map<int, ContingencyTable>> tables;
  /// Per state and year: single men and single women per category.
  std::map<std::string, std::map<int, std::pair<std::vector<double>, std::vector<double>>>> singles;

  std::optional<ContingencyTable> table(const std::string& state, int year) const;
  std::optional<TableWithSingles> with_singles(const std::string& state, int year) const;
  std::vector<std::string> states() const;
  /// States other than the reserved UNKNOWN code.
  std::vector<std::string> regular_states() const;
  /// One wave entry per configured year; missing tables stay empty.
  std::vector<Wave> waves(const std::string& state) const;
};

bool operator==(const PanelDataset& a, const PanelDataset& b);

/// CSV with header year,state,husband_edu,wife_edu,count. Duplicate keys are
/// summed; unknown years or categories raise ParseError and negative or
/// fractional counts raise ValidationError, each naming the line.
PanelDataset parse_couples(std::istream& in, const RunConfig& config);
PanelDataset load_couples(const std::string& path, const RunConfig& config);

/// CSV with header year,state,sex,edu,count, sex in {men, women}. Adds singles
/// to states and years already present in the panel.
void parse_singles(std::istream& in, const RunConfig& config, PanelDataset& panel);
void load_singles(const std::string& path, const RunConfig& config, PanelDataset& panel);

/// CSV with header state,year,top10_share, share strictly inside (0,1).
std::vector<IncomeLevel> parse_income(std::istream& in);
std::vector<IncomeLevel> load_income(const std::string& path);

/// Adds the national aggregate (sum over states; UNKNOWN only if included)
/// under kNationalState, singles included.
PanelDataset with_national(const PanelDataset& panel, bool include_unknown);
/// Merges categories in every table and singles vector.
PanelDataset apply_category_scheme(const PanelDataset& panel, CategoryScheme scheme);

void write_couples(std::ostream& out, const PanelDataset& panel);

/// 12 significant digits; "inf", "-inf" and "nan" for non-finite values.
std::string format_number(double x);
/// Value rounded to 12 significant digits, for JSON emission.
double round_significant(double x);

}  // namespace homlab
