#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "homlab/counterfactual.hpp"
#include "homlab/tables.hpp"

namespace homlab {

enum class Scheme { Sequential, WithInteraction };

std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view s);
/// NM defaults to the interaction-controlled scheme, the others to sequential.
Scheme default_scheme(Method m);

/// Split of the change in homogamy share between two generations.
///
/// Sequential: counterfactual = late association at early margins;
///   nonstructural = share(cf) - share(early), structural = share(late) - share(cf).
/// WithInteraction: both main effects are measured from the early baseline
///   (the second counterfactual puts the early association on late margins)
///   and the remainder is the interaction.
struct DecompositionResult {
  Method method = Method::IPF;
  Scheme scheme = Scheme::Sequential;
  double share_early = 0.0;
  double share_late = 0.0;
  double share_counterfactual = 0.0;
  double nonstructural_effect = 0.0;
  double structural_effect = 0.0;
  std::optional<double> interaction_effect;
  /// WithInteraction only: share of the early association on late margins.
  std::optional<double> share_reverse_counterfactual;

  double total_change() const { return share_late - share_early; }
};

DecompositionResult decompose(const ContingencyTable& early, const ContingencyTable& late, Method method,
                              Scheme scheme, const FitOptions& opts = {});

/// CSA variant: margins are the full populations (couples plus singles).
DecompositionResult decompose(const TableWithSingles& early, const TableWithSingles& late, Scheme scheme,
                              const CsaOptions& opts = {});

/// Observed share in the first present wave carried forward by the
/// nonstructural effect of each consecutive pair.
struct TrendSeries {
  int anchor_year = 0;
  double anchor_value = 0.0;
  std::vector<int> years;
  /// Effect for the pair ending at years[k]; empty at k = 0 and across gaps.
  std::vector<std::optional<double>> nonstructural_effects;
  std::vector<std::optional<double>> cumulative;
};

/// One wave of a panel; `table` is empty for a missing wave.
struct Wave {
  int year = 0;
  std::optional<ContingencyTable> table;
};

/// Once a wave is missing (or a pair cannot be decomposed) the chain breaks
/// and later cumulative values stay empty.
TrendSeries cumulative_series(const std::vector<Wave>& panel, Method method, Scheme scheme,
                              const FitOptions& opts = {});

}  // namespace homlab
