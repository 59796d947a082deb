#include "homlab/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "homlab/error.hpp"
#include "json.hpp"

namespace homlab {
namespace {

using nlohmann::json;

std::string lowercase(std::string_view s) {
  std::string out;
  for (char ch : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  std::string out(s.substr(b, e - b));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
      cur.push_back(ch);
    } else if (ch == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return in;
}

// Reads data rows after checking the header; calls f(fields, line_number).
template <class F>
void read_csv(std::istream& in, const std::vector<std::string>& header, F&& f) {
  std::string line;
  long line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_csv(line);
    if (!seen_header) {
      std::vector<std::string> got;
      for (const auto& fld : fields) got.push_back(lowercase(fld));
      if (got != header) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        throw ParseError("line " + std::to_string(line_no) + ": expected header '" + want + "'", line_no);
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                           " fields, got " + std::to_string(fields.size()),
                       line_no);
    f(fields, line_no);
  }
  if (!seen_header) throw ParseError("empty input: missing header", 0);
}

double parse_number(const std::string& s, long line_no, const char* what) {
  const char* begin = s.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (s.empty() || end != begin + s.size() || !std::isfinite(v))
    throw ParseError("line " + std::to_string(line_no) + ": " + what + " '" + s + "' is not a number", line_no);
  return v;
}

int parse_year(const std::string& s, long line_no) {
  double v = parse_number(s, line_no, "year");
  if (v != std::floor(v)) throw ParseError("line " + std::to_string(line_no) + ": year '" + s + "' is not an integer", line_no);
  return static_cast<int>(v);
}

double parse_count(const std::string& s, long line_no) {
  double v = parse_number(s, line_no, "count");
  if (v < 0.0) throw ValidationError("line " + std::to_string(line_no) + ": negative count " + s, line_no);
  if (v != std::floor(v))
    throw ValidationError("line " + std::to_string(line_no) + ": count " + s + " is not a whole number", line_no);
  return v;
}

std::size_t category_index(const RunConfig& c, const std::string& label, long line_no) {
  auto it = std::find(c.categories.begin(), c.categories.end(), label);
  if (it == c.categories.end())
    throw ParseError("line " + std::to_string(line_no) + ": unknown education category '" + label + "'", line_no);
  return static_cast<std::size_t>(it - c.categories.begin());
}

void require_year(const RunConfig& c, int year, long line_no) {
  if (std::find(c.waves.begin(), c.waves.end(), year) == c.waves.end())
    throw ParseError("line " + std::to_string(line_no) + ": year " + std::to_string(year) + " is not a configured wave",
                     line_no);
}

Rounding parse_rounding(std::string_view s) {
  std::string l = lowercase(s);
  if (l == "paper" || l == "paper-integer") return Rounding::PaperInteger;
  if (l == "continuous") return Rounding::Continuous;
  throw ValidationError("unknown rounding mode '" + std::string(s) + "'");
}

template <class T>
T get_as(const json& j, const char* key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config key '") + key + "' has the wrong type");
  }
}

std::vector<double> merge_vector(const std::vector<double>& v, const Partition& p) {
  std::vector<double> out;
  for (const auto& block : p) {
    double s = 0.0;
    for (std::size_t i : block) s += v[i];
    out.push_back(s);
  }
  return out;
}

}  // namespace

std::string_view to_string(CategoryScheme s) {
  switch (s) {
    case CategoryScheme::Three: return "three";
    case CategoryScheme::HighSchool: return "hs";
    case CategoryScheme::College: return "college";
  }
  return "?";
}

CategoryScheme parse_category_scheme(std::string_view s) {
  std::string l = lowercase(s);
  if (l == "three") return CategoryScheme::Three;
  if (l == "hs") return CategoryScheme::HighSchool;
  if (l == "college") return CategoryScheme::College;
  throw ValidationError("unknown category scheme '" + std::string(s) + "'");
}

Partition category_partition(CategoryScheme s, std::size_t n) {
  if (s == CategoryScheme::Three) return identity_partition(n);
  if (n != 3) throw ValidationError("the hs and college cuts need exactly three categories");
  return s == CategoryScheme::HighSchool ? partition_from_sizes({1, 2}) : partition_from_sizes({2, 1});
}

FitOptions RunConfig::fit_options() const {
  FitOptions o;
  o.rounding = rounding;
  o.ipf = ipf;
  o.csa = csa;
  return o;
}

RunConfig parse_config(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  RunConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "waves") {
      c.waves = get_as<std::vector<int>>(v, "waves");
      if (c.waves.size() < 2) throw ValidationError("config needs at least two waves");
      if (!std::is_sorted(c.waves.begin(), c.waves.end()) ||
          std::adjacent_find(c.waves.begin(), c.waves.end()) != c.waves.end())
        throw ValidationError("config waves must be strictly increasing");
    } else if (key == "categories") {
      c.categories = get_as<std::vector<std::string>>(v, "categories");
      if (c.categories.size() < 2) throw ValidationError("config needs at least two categories");
    } else if (key == "category_scheme") {
      c.category_scheme = parse_category_scheme(get_as<std::string>(v, "category_scheme"));
    } else if (key == "method") {
      c.method = parse_method(get_as<std::string>(v, "method"));
    } else if (key == "scheme") {
      c.scheme = parse_scheme(get_as<std::string>(v, "scheme"));
    } else if (key == "rounding") {
      c.rounding = parse_rounding(get_as<std::string>(v, "rounding"));
    } else if (key == "ipf") {
      for (const auto& [k2, v2] : v.items()) {
        if (k2 == "tol") c.ipf.tol = get_as<double>(v2, "ipf.tol");
        else if (k2 == "max_iter") c.ipf.max_iter = get_as<long>(v2, "ipf.max_iter");
        else throw ValidationError("unknown config key 'ipf." + k2 + "'");
      }
    } else if (key == "csa") {
      for (const auto& [k2, v2] : v.items()) {
        if (k2 == "tol") c.csa.tol = get_as<double>(v2, "csa.tol");
        else if (k2 == "max_iter") c.csa.max_iter = get_as<long>(v2, "csa.max_iter");
        else if (k2 == "damping") c.csa.damping = get_as<double>(v2, "csa.damping");
        else throw ValidationError("unknown config key 'csa." + k2 + "'");
      }
    } else if (key == "seed") {
      c.seed = get_as<std::uint64_t>(v, "seed");
    } else if (key == "samples") {
      c.samples = get_as<long>(v, "samples");
      if (c.samples < 1) throw ValidationError("config samples must be positive");
    } else if (key == "include_unknown") {
      c.include_unknown = get_as<bool>(v, "include_unknown");
    } else if (key == "split_boundary") {
      c.split_boundary = get_as<std::string>(v, "split_boundary");
    } else {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }
  category_partition(c.category_scheme, c.categories.size());
  return c;
}

RunConfig load_config(const std::string& path) {
  auto in = open_input(path);
  return parse_config(in);
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["waves"] = c.waves;
  j["categories"] = c.categories;
  j["category_scheme"] = std::string(to_string(c.category_scheme));
  j["method"] = std::string(to_string(c.method));
  j["scheme"] = std::string(to_string(c.effective_scheme()));
  j["rounding"] = c.rounding == Rounding::PaperInteger ? "paper" : "continuous";
  j["ipf"] = {{"tol", c.ipf.tol}, {"max_iter", c.ipf.max_iter}};
  j["csa"] = {{"tol", c.csa.tol}, {"max_iter", c.csa.max_iter}, {"damping", c.csa.damping}};
  j["seed"] = c.seed;
  j["samples"] = c.samples;
  j["include_unknown"] = c.include_unknown;
  j["split_boundary"] = c.split_boundary;
  return j.dump(2);
}

// ---------------------------------------------------------------- panel

std::optional<ContingencyTable> PanelDataset::table(const std::string& state, int year) const {
  auto s = tables.find(state);
  if (s == tables.end()) return std::nullopt;
  auto y = s->second.find(year);
  if (y == s->second.end()) return std::nullopt;
  return y->second;
}

std::optional<TableWithSingles> PanelDataset::with_singles(const std::string& state, int year) const {
  auto t = table(state, year);
  if (!t) return std::nullopt;
  auto s = singles.find(state);
  if (s == singles.end()) return std::nullopt;
  auto y = s->second.find(year);
  if (y == s->second.end()) return std::nullopt;
  return TableWithSingles(*t, y->second.first, y->second.second);
}

std::vector<std::string> PanelDataset::states() const {
  std::vector<std::string> out;
  for (const auto& [s, _] : tables) out.push_back(s);
  return out;
}

std::vector<std::string> PanelDataset::regular_states() const {
  std::vector<std::string> out;
  for (const auto& [s, _] : tables)
    if (s != kUnknownState && s != kNationalState) out.push_back(s);
  return out;
}

std::vector<Wave> PanelDataset::waves(const std::string& state) const {
  std::vector<Wave> out;
  for (int y : years) out.push_back({y, table(state, y)});
  return out;
}

bool operator==(const PanelDataset& a, const PanelDataset& b) {
  if (a.categories != b.categories || a.years != b.years || a.tables.size() != b.tables.size()) return false;
  for (const auto& [state, by_year] : a.tables) {
    auto it = b.tables.find(state);
    if (it == b.tables.end() || it->second.size() != by_year.size()) return false;
    for (const auto& [year, t] : by_year) {
      auto jt = it->second.find(year);
      if (jt == it->second.end() || !(jt->second.counts() == t.counts())) return false;
    }
  }
  return a.singles == b.singles;
}

PanelDataset parse_couples(std::istream& in, const RunConfig& config) {
  PanelDataset p;
  p.categories = config.categories;
  p.years = config.waves;
  const std::size_t n = config.categories.size();
  std::map<std::string, std::map<int, Matrix>> acc;
  read_csv(in, {"year", "state", "husband_edu", "wife_edu", "count"}, [&](const auto& f, long line_no) {
    int year = parse_year(f[0], line_no);
    require_year(config, year, line_no);
    if (f[1].empty()) throw ParseError("line " + std::to_string(line_no) + ": empty state", line_no);
    std::size_t h = category_index(config, f[2], line_no);
    std::size_t w = category_index(config, f[3], line_no);
    double count = parse_count(f[4], line_no);
    auto [it, fresh] = acc[f[1]].try_emplace(year, n, n);
    it->second(h, w) += count;
  });
  for (auto& [state, by_year] : acc)
    for (auto& [year, m] : by_year) p.tables[state].emplace(year, ContingencyTable(std::move(m), config.categories, config.categories));
  return p;
}

PanelDataset load_couples(const std::string& path, const RunConfig& config) {
  auto in = open_input(path);
  return parse_couples(in, config);
}

void parse_singles(std::istream& in, const RunConfig& config, PanelDataset& panel) {
  const std::size_t n = config.categories.size();
  std::map<std::string, std::map<int, std::pair<std::vector<double>, std::vector<double>>>> acc;
  read_csv(in, {"year", "state", "sex", "edu", "count"}, [&](const auto& f, long line_no) {
    int year = parse_year(f[0], line_no);
    require_year(config, year, line_no);
    std::string sex = lowercase(f[2]);
    if (sex != "men" && sex != "women")
      throw ParseError("line " + std::to_string(line_no) + ": sex must be 'men' or 'women'", line_no);
    std::size_t k = category_index(config, f[3], line_no);
    double count = parse_count(f[4], line_no);
    auto& entry = acc[f[1]][year];
    if (entry.first.empty()) entry = {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    (sex == "men" ? entry.first : entry.second)[k] += count;
  });
  for (auto& [state, by_year] : acc)
    for (auto& [year, s] : by_year) panel.singles[state][year] = std::move(s);
}

void load_singles(const std::string& path, const RunConfig& config, PanelDataset& panel) {
  auto in = open_input(path);
  parse_singles(in, config, panel);
}

std::vector<IncomeLevel> parse_income(std::istream& in) {
  std::vector<IncomeLevel> out;
  read_csv(in, {"state", "year", "top10_share"}, [&](const auto& f, long line_no) {
    int year = parse_year(f[1], line_no);
    double share = parse_number(f[2], line_no, "top10_share");
    if (!(share > 0.0 && share < 1.0))
      throw ValidationError("line " + std::to_string(line_no) + ": top10_share must lie strictly between 0 and 1",
                            line_no);
    out.push_back({f[0], year, share});
  });
  return out;
}

std::vector<IncomeLevel> load_income(const std::string& path) {
  auto in = open_input(path);
  return parse_income(in);
}

PanelDataset with_national(const PanelDataset& panel, bool include_unknown) {
  PanelDataset out = panel;
  out.tables.erase(kNationalState);
  out.singles.erase(kNationalState);
  const std::size_t n = panel.categories.size();
  for (int year : panel.years) {
    std::optional<Matrix> sum;
    std::vector<double> men(n, 0.0), women(n, 0.0);
    bool all_singles = true;
    for (const auto& [state, by_year] : panel.tables) {
      if (state == kNationalState || (state == kUnknownState && !include_unknown)) continue;
      auto it = by_year.find(year);
      if (it == by_year.end()) continue;
      if (!sum) sum = Matrix(it->second.rows(), it->second.cols());
      *sum += it->second.counts();
      auto s = panel.with_singles(state, year);
      if (!s) {
        all_singles = false;
        continue;
      }
      for (std::size_t i = 0; i < n; ++i) {
        men[i] += s->single_men[i];
        women[i] += s->single_women[i];
      }
    }
    if (!sum) continue;
    out.tables[kNationalState].emplace(year, ContingencyTable(std::move(*sum), panel.categories, panel.categories));
    if (all_singles) out.singles[kNationalState][year] = {men, women};
  }
  return out;
}

PanelDataset apply_category_scheme(const PanelDataset& panel, CategoryScheme scheme) {
  Partition p = category_partition(scheme, panel.categories.size());
  if (scheme == CategoryScheme::Three) return panel;
  PanelDataset out;
  out.years = panel.years;
  for (const auto& block : p) {
    std::string name = panel.categories[block.front()];
    if (block.size() > 1) name += ".." + panel.categories[block.back()];
    out.categories.push_back(name);
  }
  for (const auto& [state, by_year] : panel.tables)
    for (const auto& [year, t] : by_year) out.tables[state].emplace(year, merge_categories(t, p, p));
  for (const auto& [state, by_year] : panel.singles)
    for (const auto& [year, s] : by_year)
      out.singles[state][year] = {merge_vector(s.first, p), merge_vector(s.second, p)};
  return out;
}

void write_couples(std::ostream& out, const PanelDataset& panel) {
  out << "year,state,husband_edu,wife_edu,count\n";
  for (const auto& [state, by_year] : panel.tables)
    for (const auto& [year, t] : by_year)
      for (std::size_t h = 0; h < t.rows(); ++h)
        for (std::size_t w = 0; w < t.cols(); ++w)
          out << year << ',' << state << ',' << panel.categories[h] << ',' << panel.categories[w] << ','
              << format_number(t(h, w)) << '\n';
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

double round_significant(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  return std::strtod(format_number(x).c_str(), nullptr);
}

}  // namespace homlab
