#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "homlab/counterfactual.hpp"
#include "homlab/indicators.hpp"
#include "homlab/matrix.hpp"
#include "homlab/tables.hpp"

namespace homlab {

enum class Criterion {
  AC1, AC2, AC3, AC4, AC5, AC5_1, AC5_2, AC5_3, AC6, AC7,
  AC8_1, AC8_2, AC8_3, AC9, AC10, AC11, AC12
};
/// "AC5.1" style identifiers.
std::string_view to_string(Criterion c);
Criterion parse_criterion(std::string_view s);

enum class Indicator {
  OddsRatio, Determinant, Covariance, Correlation, Regression,
  AggregateMsp, VValue, Msm, LL, GLL
};
/// "I1".."I10".
std::string_view code(Indicator i);
/// Short machine name, e.g. "odds-ratio", "gll".
std::string_view to_string(Indicator i);
/// Accepts either the code or the machine name (case-insensitive).
Indicator parse_indicator(std::string_view s);
inline constexpr std::array<Indicator, 10> kAllIndicators{
    Indicator::OddsRatio, Indicator::Determinant, Indicator::Covariance, Indicator::Correlation,
    Indicator::Regression, Indicator::AggregateMsp, Indicator::VValue, Indicator::Msm,
    Indicator::LL, Indicator::GLL};
inline constexpr std::array<Method, 5> kAllMethods{Method::IPF, Method::MDbA, Method::MEDA, Method::CSA,
                                                   Method::NM};

/// Value of an indicator as a matrix; scalar indicators give 1x1. Regression
/// reports the wives-on-husbands slope. MSM needs singles; the others read the
/// couple table only. Throws when the indicator is undefined on `t`.
Matrix indicator_value(Indicator ind, const TableWithSingles& t, Rounding rounding = Rounding::PaperInteger);

enum class PerturbationKind { Scale, Type1Row, Type1Col, Type2Row, Type2Col, VoluntarySingles, InvoluntarySingles };
std::string_view to_string(PerturbationKind k);

struct MarginalPerturbation {
  PerturbationKind kind = PerturbationKind::Scale;
  /// r for scale, alpha for type-1 (> 0) and type-2 (in (0,1)).
  double alpha = 1.0;
  /// Singles additions (low men, high men, low women, high women).
  std::array<double, 4> singles_delta{0, 0, 0, 0};
};

/// Type-1/type-2 kinds need 2x2 tables; singles kinds need a TableWithSingles.
/// On a TableWithSingles the type-1/type-2 kinds move singles along with couples.
ContingencyTable apply_perturbation(const ContingencyTable& t, const MarginalPerturbation& p);
TableWithSingles apply_perturbation(const TableWithSingles& t, const MarginalPerturbation& p);

/// Everything needed to replay one checked instance.
struct Witness {
  TableWithSingles table;
  /// AC6/AC7: the competing table that beats `table`.
  std::optional<TableWithSingles> companion;
  std::optional<MarginalPerturbation> perturbation;
  /// AC8.1: additions to the diagonal.
  std::vector<double> diagonal;
  /// Method target: margins for table methods, populations for CSA.
  std::optional<Marginals> target;
  std::vector<double> target_men;
  std::vector<double> target_women;
  /// AC10: merge applied to rows and columns.
  Partition row_partition;
  Partition col_partition;
  double scale = 1.0;
  Rounding rounding = Rounding::PaperInteger;
  /// Violation measured when the witness was found.
  double violation = 0.0;
};

enum class Verdict { Satisfied, Counterexample, NotApplicable, NotAutomated };
/// "satisfied-on-sample", "counterexample-found", "not-applicable", "not-automated".
std::string_view to_string(Verdict v);

struct CriterionReport {
  Criterion criterion = Criterion::AC1;
  std::string subject;
  Verdict verdict = Verdict::NotApplicable;
  std::optional<Witness> witness;
  long sample_size = 0;
  /// Recorded property for criteria that are looked up, not checked.
  std::optional<bool> metadata;
  std::string note;
};

/// Matrix cell: Y, N, NA, or "-" for not automated; looked-up criteria show their metadata.
std::string cell_symbol(const CriterionReport& r);

/// Violations above this count as counterexamples.
inline constexpr double kViolationThreshold = 1e-7;

struct CheckOptions {
  long samples = 500;
  /// Samples for the enumeration-based PAM criteria.
  long enumeration_samples = 30;
  std::uint64_t seed = 20240611;
  Rounding rounding = Rounding::PaperInteger;
  /// NM rounding; unset means continuous for AC2, AC3 and AC10 and `rounding` otherwise.
  std::optional<Rounding> nm_rounding;
};

CriterionReport check_indicator(Criterion c, Indicator ind, const CheckOptions& opts = {});
CriterionReport check_method(Criterion c, Method m, const CheckOptions& opts = {});

/// Recomputes the violation a witness exhibits; 0 when the criterion holds on it.
double indicator_violation(Criterion c, Indicator ind, const Witness& w);
double method_violation(Criterion c, Method m, const Witness& w);

/// Criteria rows of the indicator and method matrices, in display order.
const std::vector<Criterion>& indicator_criteria();
const std::vector<Criterion>& method_criteria();

/// Every (criterion, indicator) report, row-major over indicator_criteria().
std::vector<CriterionReport> indicator_matrix(const CheckOptions& opts = {});
/// Every (criterion, method) report, row-major over method_criteria().
std::vector<CriterionReport> method_matrix(const CheckOptions& opts = {});

}  // namespace homlab
