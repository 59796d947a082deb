#include "homlab/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "homlab/error.hpp"
#include "json.hpp"

namespace homlab {
namespace {

using nlohmann::json;

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string csv_number(std::optional<double> x) { return x ? format_number(*x) : ""; }

json json_number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return round_significant(x);
}

json json_number(std::optional<double> x) { return x ? json_number(*x) : json(nullptr); }

json json_vector(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(json_number(x));
  return out;
}

json json_matrix(const Matrix& m) {
  json out = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(json_number(m(r, c)));
    out.push_back(row);
  }
  return out;
}

json json_marginals(const Marginals& m) {
  return {{"rows", json_vector(m.row_sums)}, {"cols", json_vector(m.col_sums)}, {"total", json_number(m.total)}};
}

const PanelDataset& require_panel(const CommandInputs& in) {
  if (!in.panel) throw ValidationError("this subcommand needs a couples panel (--couples)");
  return *in.panel;
}

/// States reported per table: the filter (if any) plus the national aggregate.
std::vector<std::string> reported_states(const PanelDataset& p, const CommandInputs& in) {
  std::vector<std::string> out;
  for (const auto& s : p.states()) {
    if (s == kUnknownState || s == kNationalState) continue;
    if (in.state && s != *in.state) continue;
    out.push_back(s);
  }
  if (in.state && out.empty()) throw ValidationError("state '" + *in.state + "' is not in the panel");
  if (p.tables.count(kNationalState)) out.push_back(kNationalState);
  return out;
}

void validate_pair(const RunConfig& c, int early, int late) {
  const auto& w = c.waves;
  auto known = [&](int y) { return std::find(w.begin(), w.end(), y) != w.end(); };
  if (!known(early) || !known(late)) throw ValidationError("early and late years must be configured waves");
  if (early >= late) throw ValidationError("early year must precede late year");
}

/// Consecutive configured waves, or the single requested pair.
std::vector<std::pair<int, int>> year_pairs(const CommandInputs& in) {
  const auto& w = in.config.waves;
  if (in.early_year || in.late_year) {
    int e = in.early_year.value_or(w.front());
    int l = in.late_year.value_or(w.back());
    validate_pair(in.config, e, l);
    return {{e, l}};
  }
  std::vector<std::pair<int, int>> out;
  for (std::size_t k = 0; k + 1 < w.size(); ++k) out.emplace_back(w[k], w[k + 1]);
  return out;
}

bool needs_singles(Method m) { return m == Method::CSA; }

DecompositionResult decompose_pair(const PanelDataset& p, const std::string& state, int early, int late,
                                   const RunConfig& c) {
  if (needs_singles(c.method)) {
    auto e = p.with_singles(state, early);
    auto l = p.with_singles(state, late);
    if (!e || !l) throw InsufficientData("CSA needs singles for both waves (--singles)");
    return decompose(*e, *l, c.effective_scheme(), c.csa);
  }
  return decompose(*p.table(state, early), *p.table(state, late), c.method, c.effective_scheme(), c.fit_options());
}

std::string status_of(const Error& e) {
  if (dynamic_cast<const InfeasibleError*>(&e)) return "infeasible";
  return "error";
}

std::string entry_label(const Matrix& m, std::size_t r, std::size_t c) {
  if (m.rows() == 1 && m.cols() == 1) return "";
  return "r" + std::to_string(r + 1) + "c" + std::to_string(c + 1);
}

double scalar_indicator(Indicator ind, const ContingencyTable& t, Rounding rounding) {
  if (ind == Indicator::Msm) throw ValidationError("the marital surplus matrix cannot serve as a trend measure");
  Matrix v = indicator_value(ind, TableWithSingles(t, std::vector<double>(t.rows(), 0.0),
                                                   std::vector<double>(t.cols(), 0.0)),
                             rounding);
  if (v.rows() != 1 || v.cols() != 1)
    throw ShapeError(std::string(to_string(ind)) + " is matrix-valued on this table; use a two-category cut");
  return v(0, 0);
}

}  // namespace

PanelDataset prepare_panel(const PanelDataset& raw, const RunConfig& config) {
  return with_national(apply_category_scheme(raw, config.category_scheme), config.include_unknown);
}

// ---------------------------------------------------------------- indicators

CommandResult run_indicators(const CommandInputs& in) {
  const PanelDataset p = prepare_panel(require_panel(in), in.config);
  std::ostringstream out;
  out << "state,year,indicator,entry,value,note\n";
  for (const auto& state : reported_states(p, in)) {
    for (int year : p.years) {
      auto t = p.table(state, year);
      if (!t) continue;
      auto ws = p.with_singles(state, year);
      for (Indicator ind : kAllIndicators) {
        if (in.indicator && ind != *in.indicator) continue;
        if (ind == Indicator::Msm && !ws) continue;
        const std::string name = std::string(code(ind)) + " " + std::string(to_string(ind));
        TableWithSingles subject =
            ws ? *ws : TableWithSingles(*t, std::vector<double>(t->rows(), 0.0), std::vector<double>(t->cols(), 0.0));
        try {
          Matrix v = indicator_value(ind, subject, in.config.rounding);
          for (std::size_t r = 0; r < v.rows(); ++r)
            for (std::size_t c = 0; c < v.cols(); ++c)
              out << csv_field(state) << ',' << year << ',' << name << ',' << entry_label(v, r, c) << ','
                  << format_number(v(r, c)) << ",\n";
        } catch (const ShapeError&) {
          // Not defined for this table shape.
        } catch (const Error& e) {
          out << csv_field(state) << ',' << year << ',' << name << ",,," << csv_field(e.what()) << '\n';
        }
      }
    }
  }
  return {{{"indicators.csv", out.str()}}};
}

// ---------------------------------------------------------------- counterfactual

CommandResult run_counterfactual(const CommandInputs& in) {
  const PanelDataset p = prepare_panel(require_panel(in), in.config);
  const RunConfig& cfg = in.config;
  const int early = in.early_year.value_or(cfg.waves.front());
  const int late = in.late_year.value_or(cfg.waves.back());
  validate_pair(cfg, early, late);

  json entries = json::array();
  for (const auto& state : reported_states(p, in)) {
    json e;
    e["state"] = state;
    e["early_year"] = early;
    e["late_year"] = late;
    e["method"] = std::string(to_string(cfg.method));
    auto te = p.table(state, early);
    auto tl = p.table(state, late);
    if (!te || !tl) {
      e["status"] = "missing";
      e["message"] = "missing " + std::to_string(te ? late : early) + " wave";
      entries.push_back(e);
      continue;
    }
    e["source"] = json_matrix(tl->counts());
    e["target"] = json_marginals(marginals(*te));
    try {
      CounterfactualResult r;
      if (needs_singles(cfg.method)) {
        auto se = p.with_singles(state, early);
        auto sl = p.with_singles(state, late);
        if (!se || !sl) throw InsufficientData("CSA needs singles for both waves (--singles)");
        r = csa_fit(*sl, se->men_population(), se->women_population(), cfg.csa);
        e["single_men"] = json_vector(r.single_men);
        e["single_women"] = json_vector(r.single_women);
      } else {
        r = fit(cfg.method, *tl, marginals(*te), cfg.fit_options());
      }
      e["status"] = "ok";
      e["table"] = json_matrix(r.table.counts());
      e["homogamy_share"] = json_number(homogamy_share(r.table));
      e["iterations"] = r.iterations;
      e["max_marginal_error"] = json_number(r.max_marginal_error);
      json diag = json::object();
      for (const auto& [k, v] : r.diagnostics) diag[k] = json_number(v);
      e["diagnostics"] = diag;
    } catch (const Error& err) {
      e["status"] = status_of(err);
      e["message"] = err.what();
    }
    entries.push_back(e);
  }
  return {{{"counterfactual.json", entries.dump(2) + "\n"}}};
}

// ---------------------------------------------------------------- decompose

CommandResult run_decompose(const CommandInputs& in) {
  const PanelDataset p = prepare_panel(require_panel(in), in.config);
  const RunConfig& cfg = in.config;
  std::ostringstream out;
  out << "state,decade,early_year,late_year,method,scheme,share_early,share_late,share_counterfactual,"
         "nonstructural,structural,interaction,status\n";
  const auto pairs = year_pairs(in);
  for (const auto& state : reported_states(p, in)) {
    for (auto [early, late] : pairs) {
      out << csv_field(state) << ',' << decade_label(early) << ',' << early << ',' << late << ','
          << to_string(cfg.method) << ',' << to_string(cfg.effective_scheme()) << ',';
      if (!p.table(state, early) || !p.table(state, late)) {
        out << ",,,,,,missing " << (p.table(state, early) ? late : early) << " wave\n";
        continue;
      }
      try {
        auto d = decompose_pair(p, state, early, late, cfg);
        out << format_number(d.share_early) << ',' << format_number(d.share_late) << ','
            << format_number(d.share_counterfactual) << ',' << format_number(d.nonstructural_effect) << ','
            << format_number(d.structural_effect) << ',' << csv_number(d.interaction_effect) << ",ok\n";
      } catch (const Error& e) {
        out << ",,,,,," << csv_field(status_of(e) + ": " + e.what()) << '\n';
      }
    }
  }
  return {{{"decomposition.csv", out.str()}}};
}

// ---------------------------------------------------------------- trend

CommandResult run_trend(const CommandInputs& in) {
  const PanelDataset p = prepare_panel(require_panel(in), in.config);
  const RunConfig& cfg = in.config;

  std::vector<std::string> states;
  for (const auto& s : p.regular_states())
    if (!in.state || s == *in.state) states.push_back(s);

  std::vector<DecadeChange> changes;
  for (const auto& state : states) {
    std::vector<Wave> waves = p.waves(state);
    // Measures receive references into `waves`, so addresses identify the year.
    std::map<const ContingencyTable*, int> year_of;
    for (const auto& w : waves)
      if (w.table) year_of[&*w.table] = w.year;
    ChangeMeasure measure;
    if (in.indicator) {
      measure = [&](const ContingencyTable& e, const ContingencyTable& l) {
        return scalar_indicator(*in.indicator, l, cfg.rounding) - scalar_indicator(*in.indicator, e, cfg.rounding);
      };
    } else {
      measure = [&](const ContingencyTable& e, const ContingencyTable& l) {
        return decompose_pair(p, state, year_of.at(&e), year_of.at(&l), cfg).nonstructural_effect;
      };
    }
    for (auto& c : decade_changes(state, waves, measure)) changes.push_back(std::move(c));
  }

  const IncomeDeltas income = income_deltas(in.income);
  const TrendStats stats = score(changes, income, cfg.split_boundary);

  std::map<std::pair<std::string, int>, bool> u_flag;
  for (const auto& f : classify_u_shape(changes)) u_flag[{f.state, f.decade}] = f.consistent;
  std::map<std::pair<std::string, int>, IncomeFlag> s_flag;
  for (const auto& f : income_consistency(changes, income)) s_flag[{f.state, f.decade}] = f;

  std::ostringstream pairs;
  pairs << "state,decade,early_year,late_year,delta,valid,u_consistent,income_delta,income_consistent,reason\n";
  for (const auto& c : changes) {
    const auto key = std::make_pair(c.state, c.decade);
    pairs << csv_field(c.state) << ',' << decade_label(c.decade) << ',' << c.decade << ',' << c.decade + 10 << ',';
    if (!c.valid) {
      pairs << ",false,,,," << csv_field(c.reason) << '\n';
      continue;
    }
    auto inc = income.find(key);
    const auto& sf = s_flag.at(key);
    pairs << format_number(c.delta) << ",true," << (u_flag.at(key) ? "true" : "false") << ','
          << (inc != income.end() ? format_number(inc->second) : "") << ','
          << (sf.consistent ? (*sf.consistent ? "true" : "false") : "") << ',' << csv_field(sf.reason) << '\n';
  }

  std::ostringstream series;
  series << "state,year,share,nonstructural_effect,cumulative\n";
  std::vector<std::string> series_states = states;
  if (p.tables.count(kNationalState)) series_states.push_back(kNationalState);
  for (const auto& state : series_states) {
    const std::vector<Wave> waves = p.waves(state);
    std::size_t present = 0;
    for (const auto& w : waves) present += w.table.has_value();
    if (present < 2) continue;
    TrendSeries ts;
    if (needs_singles(cfg.method)) {
      // Same chaining rule as cumulative_series, with singles-aware effects.
      std::size_t first = 0;
      while (!waves[first].table) ++first;
      bool intact = true;
      double running = homogamy_share(*waves[first].table);
      for (std::size_t k = first; k < waves.size(); ++k) {
        ts.years.push_back(waves[k].year);
        std::optional<double> effect;
        if (k > first && waves[k].table && waves[k - 1].table) {
          try {
            effect = decompose_pair(p, state, waves[k - 1].year, waves[k].year, cfg).nonstructural_effect;
          } catch (const Error&) {
          }
        }
        if (k > first) {
          intact = intact && effect.has_value();
          if (intact) running += *effect;
        }
        ts.nonstructural_effects.push_back(effect);
        ts.cumulative.push_back(intact ? std::optional<double>(running) : std::nullopt);
      }
    } else {
      ts = cumulative_series(waves, cfg.method, cfg.effective_scheme(), cfg.fit_options());
    }
    for (std::size_t k = 0; k < ts.years.size(); ++k) {
      auto t = p.table(state, ts.years[k]);
      series << csv_field(state) << ',' << ts.years[k] << ','
             << (t ? format_number(homogamy_share(*t)) : "") << ',' << csv_number(ts.nonstructural_effects[k])
             << ',' << csv_number(ts.cumulative[k]) << '\n';
    }
  }

  json j;
  j["method"] = std::string(to_string(cfg.method));
  j["scheme"] = std::string(to_string(cfg.effective_scheme()));
  j["measure"] = in.indicator ? "indicator-change:" + std::string(to_string(*in.indicator)) : "nonstructural-effect";
  j["category_scheme"] = std::string(to_string(cfg.category_scheme));
  j["split_boundary"] = cfg.split_boundary;
  j["stats"] = {{"n_U", stats.n_U},         {"n_s", stats.n_s}, {"n_alpha", stats.n_alpha},
                {"n_omega", stats.n_omega}, {"N", stats.N},     {"N_alpha", stats.N_alpha},
                {"N_omega", stats.N_omega}, {"income_excluded", stats.income_excluded}};
  j["ratios"] = {{"U", json_number(stats.ratio_U())},
                 {"s", json_number(stats.ratio_s())},
                 {"alpha", json_number(stats.ratio_alpha())},
                 {"omega", json_number(stats.ratio_omega())}};
  long invalid = 0;
  for (const auto& c : changes) invalid += !c.valid;
  j["invalid_pairs"] = invalid;

  return {{{"trend.json", j.dump(2) + "\n"}, {"pairs.csv", pairs.str()}, {"trend_series.csv", series.str()}}};
}

// ---------------------------------------------------------------- criteria

CommandResult run_criteria(const CommandInputs& in) {
  CheckOptions opts;
  opts.samples = in.config.samples;
  opts.seed = in.config.seed;
  opts.rounding = in.config.rounding;

  const auto ind = indicator_matrix(opts);
  const auto meth = method_matrix(opts);

  auto matrix_csv = [](const std::vector<CriterionReport>& reports, const std::vector<Criterion>& rows,
                       std::size_t width) {
    std::ostringstream out;
    out << "criterion";
    for (std::size_t k = 0; k < width; ++k) out << ',' << csv_field(reports[k].subject);
    out << '\n';
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out << to_string(rows[r]);
      for (std::size_t k = 0; k < width; ++k) out << ',' << cell_symbol(reports[r * width + k]);
      out << '\n';
    }
    return out.str();
  };

  std::ostringstream details;
  details << "table,criterion,subject,verdict,symbol,sample_size,violation,note\n";
  json j;
  auto add = [&](const char* table, const std::vector<CriterionReport>& reports, json& node) {
    for (const auto& r : reports) {
      const std::string violation = r.witness ? format_number(r.witness->violation) : "";
      details << table << ',' << to_string(r.criterion) << ',' << csv_field(r.subject) << ',' << to_string(r.verdict)
              << ',' << cell_symbol(r) << ',' << r.sample_size << ',' << violation << ','
              << csv_field(r.note) << '\n';
      node[std::string(to_string(r.criterion))][r.subject] = cell_symbol(r);
    }
  };
  j["seed"] = opts.seed;
  j["samples"] = opts.samples;
  j["indicators"] = json::object();
  j["methods"] = json::object();
  add("indicators", ind, j["indicators"]);
  add("methods", meth, j["methods"]);

  return {{{"criteria_indicators.csv", matrix_csv(ind, indicator_criteria(), kAllIndicators.size())},
           {"criteria_methods.csv", matrix_csv(meth, method_criteria(), kAllMethods.size())},
           {"criteria_details.csv", details.str()},
           {"criteria.json", j.dump(2) + "\n"}}};
}

CommandResult run_command(std::string_view subcommand, const CommandInputs& in) {
  if (subcommand == "indicators") return run_indicators(in);
  if (subcommand == "counterfactual") return run_counterfactual(in);
  if (subcommand == "decompose") return run_decompose(in);
  if (subcommand == "trend") return run_trend(in);
  if (subcommand == "criteria") return run_criteria(in);
  throw ValidationError("unknown subcommand '" + std::string(subcommand) + "'");
}

void write_artifacts(const CommandResult& result, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
  for (const auto& a : result.artifacts) {
    const auto path = std::filesystem::path(dir) / a.name;
    std::ofstream f(path, std::ios::binary);
    f << a.content;
    f.close();
    if (!f) throw Error("cannot write '" + path.string() + "'");
  }
}

}  // namespace homlab
