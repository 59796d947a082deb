#include "homlab/trend.hpp"

#include <algorithm>

#include "homlab/error.hpp"

namespace homlab {
namespace {

std::optional<double> ratio(long num, long den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

int sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

int u_shape_sign(int decade) { return decade < 1990 ? -1 : 1; }

std::string decade_label(int decade) { return std::to_string(decade) + "s"; }

std::vector<PairFlag> classify_u_shape(const std::vector<DecadeChange>& changes) {
  std::vector<PairFlag> out;
  for (const auto& c : changes) {
    if (!c.valid) continue;
    out.push_back({c.state, c.decade, sign(c.delta) == u_shape_sign(c.decade)});
  }
  return out;
}

IncomeDeltas income_deltas(const std::vector<IncomeLevel>& levels) {
  std::map<std::pair<std::string, int>, double> by_key;
  for (const auto& l : levels) by_key[{l.state, l.year}] = l.top10_share;
  IncomeDeltas out;
  for (const auto& [key, value] : by_key) {
    auto next = by_key.find({key.first, key.second + 10});
    if (next != by_key.end()) out[key] = next->second - value;
  }
  return out;
}

std::vector<IncomeFlag> income_consistency(const std::vector<DecadeChange>& changes, const IncomeDeltas& income) {
  std::vector<IncomeFlag> out;
  for (const auto& c : changes) {
    if (!c.valid) continue;
    IncomeFlag f{c.state, c.decade, std::nullopt, {}};
    auto it = income.find({c.state, c.decade});
    if (it == income.end()) {
      f.reason = "no income-share change for " + c.state + " " + decade_label(c.decade);
    } else {
      int s = sign(c.delta);
      f.consistent = s != 0 && s == sign(it->second);
    }
    out.push_back(std::move(f));
  }
  return out;
}

bool in_first_half(const std::string& state, const std::string& boundary) { return state <= boundary; }

std::optional<double> TrendStats::ratio_U() const { return ratio(n_U, N); }
std::optional<double> TrendStats::ratio_s() const { return ratio(n_s, N); }
std::optional<double> TrendStats::ratio_alpha() const { return ratio(n_alpha, N_alpha); }
std::optional<double> TrendStats::ratio_omega() const { return ratio(n_omega, N_omega); }

TrendStats score(const std::vector<DecadeChange>& changes, const IncomeDeltas& income, const std::string& boundary) {
  TrendStats s;
  for (const auto& f : classify_u_shape(changes)) {
    ++s.N;
    (in_first_half(f.state, boundary) ? s.N_alpha : s.N_omega) += 1;
    s.n_U += f.consistent;
  }
  for (const auto& f : income_consistency(changes, income)) {
    if (!f.consistent) {
      ++s.income_excluded;
      continue;
    }
    if (!*f.consistent) continue;
    ++s.n_s;
    (in_first_half(f.state, boundary) ? s.n_alpha : s.n_omega) += 1;
  }
  return s;
}

std::vector<DecadeChange> decade_changes(const std::string& state, const std::vector<Wave>& waves,
                                         const ChangeMeasure& measure) {
  std::map<int, const Wave*> by_year;
  for (const auto& w : waves) by_year[w.year] = &w;
  std::vector<DecadeChange> out;
  for (int decade = kFirstDecade; decade <= kLastDecade; decade += 10) {
    DecadeChange c{state, decade, 0.0, false, {}};
    auto early = by_year.find(decade);
    auto late = by_year.find(decade + 10);
    if (early == by_year.end() || !early->second->table) {
      c.reason = "missing " + std::to_string(decade) + " wave";
    } else if (late == by_year.end() || !late->second->table) {
      c.reason = "missing " + std::to_string(decade + 10) + " wave";
    } else {
      try {
        c.delta = measure(*early->second->table, *late->second->table);
        c.valid = true;
      } catch (const Error& e) {
        c.reason = e.what();
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace homlab
