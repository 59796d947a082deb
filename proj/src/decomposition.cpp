#include "homlab/decomposition.hpp"

#include <cctype>
#include <string>

#include "homlab/error.hpp"

namespace homlab {
namespace {

void require_same_layout(const ContingencyTable& early, const ContingencyTable& late) {
  if (early.rows() != late.rows() || early.cols() != late.cols())
    throw ShapeError("early and late tables have different dimensions");
  if (early.row_labels() != late.row_labels() || early.col_labels() != late.col_labels())
    throw ShapeError("early and late tables have different category labels");
}

DecompositionResult assemble(Method method, Scheme scheme, double early, double late, double cf,
                             std::optional<double> reverse_cf) {
  DecompositionResult out;
  out.method = method;
  out.scheme = scheme;
  out.share_early = early;
  out.share_late = late;
  out.share_counterfactual = cf;
  out.nonstructural_effect = cf - early;
  if (scheme == Scheme::Sequential) {
    out.structural_effect = late - cf;
  } else {
    out.share_reverse_counterfactual = reverse_cf;
    out.structural_effect = *reverse_cf - early;
    out.interaction_effect = (late - early) - out.nonstructural_effect - out.structural_effect;
  }
  return out;
}

}  // namespace

std::string_view to_string(Scheme s) { return s == Scheme::Sequential ? "sequential" : "with-interaction"; }

Scheme parse_scheme(std::string_view s) {
  std::string lower;
  for (char ch : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (lower == "sequential") return Scheme::Sequential;
  if (lower == "with-interaction" || lower == "interaction") return Scheme::WithInteraction;
  throw ValidationError("unknown decomposition scheme '" + std::string(s) + "'");
}

Scheme default_scheme(Method m) { return m == Method::NM ? Scheme::WithInteraction : Scheme::Sequential; }

DecompositionResult decompose(const ContingencyTable& early, const ContingencyTable& late, Method method,
                              Scheme scheme, const FitOptions& opts) {
  require_same_layout(early, late);
  const double s_early = homogamy_share(early);
  const double s_late = homogamy_share(late);
  const double cf = homogamy_share(fit(method, late, marginals(early), opts).table);
  std::optional<double> reverse;
  if (scheme == Scheme::WithInteraction) reverse = homogamy_share(fit(method, early, marginals(late), opts).table);
  return assemble(method, scheme, s_early, s_late, cf, reverse);
}

DecompositionResult decompose(const TableWithSingles& early, const TableWithSingles& late, Scheme scheme,
                              const CsaOptions& opts) {
  require_same_layout(early.couples, late.couples);
  const double s_early = homogamy_share(early.couples);
  const double s_late = homogamy_share(late.couples);
  const double cf =
      homogamy_share(csa_fit(late, early.men_population(), early.women_population(), opts).table);
  std::optional<double> reverse;
  if (scheme == Scheme::WithInteraction)
    reverse = homogamy_share(csa_fit(early, late.men_population(), late.women_population(), opts).table);
  return assemble(Method::CSA, scheme, s_early, s_late, cf, reverse);
}

TrendSeries cumulative_series(const std::vector<Wave>& panel, Method method, Scheme scheme,
                              const FitOptions& opts) {
  std::size_t present = 0;
  for (const auto& w : panel) present += w.table.has_value();
  if (present < 2) throw InsufficientData("cumulative series needs at least two waves with data");

  TrendSeries out;
  std::size_t first = 0;
  while (!panel[first].table) ++first;
  out.anchor_year = panel[first].year;
  out.anchor_value = homogamy_share(*panel[first].table);

  bool chain_intact = true;
  double running = out.anchor_value;
  for (std::size_t k = first; k < panel.size(); ++k) {
    out.years.push_back(panel[k].year);
    if (k == first) {
      out.nonstructural_effects.emplace_back();
      out.cumulative.emplace_back(running);
      continue;
    }
    std::optional<double> effect;
    if (panel[k].table && panel[k - 1].table) {
      try {
        effect = decompose(*panel[k - 1].table, *panel[k].table, method, scheme, opts).nonstructural_effect;
      } catch (const Error&) {
      }
    }
    out.nonstructural_effects.push_back(effect);
    chain_intact = chain_intact && effect.has_value();
    if (chain_intact) {
      running += *effect;
      out.cumulative.emplace_back(running);
    } else {
      out.cumulative.emplace_back();
    }
  }
  return out;
}

}  // namespace homlab
