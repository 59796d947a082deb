#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "homlab/commands.hpp"
#include "homlab/error.hpp"

namespace {

struct Flags {
  std::string config;
  std::string couples;
  std::string singles;
  std::string income;
  std::string out = "out";
  std::string method;
  std::string scheme;
  std::string categories;
  std::string rounding;
  std::string indicator;
  std::string state;
  std::optional<std::uint64_t> seed;
  std::optional<long> samples;
  std::optional<int> early;
  std::optional<int> late;
};

homlab::CommandInputs build_inputs(const std::string& sub, const Flags& f) {
  using namespace homlab;
  CommandInputs in;
  if (!f.config.empty()) in.config = load_config(f.config);

  // Command-line flags override the config file.
  RunConfig& c = in.config;
  if (!f.method.empty()) {
    c.method = parse_method(f.method);
    if (f.scheme.empty()) c.scheme.reset();
  }
  if (!f.scheme.empty()) c.scheme = parse_scheme(f.scheme);
  if (!f.categories.empty()) c.category_scheme = parse_category_scheme(f.categories);
  if (!f.rounding.empty()) {
    if (f.rounding == "paper") c.rounding = Rounding::PaperInteger;
    else if (f.rounding == "continuous") c.rounding = Rounding::Continuous;
    else throw ValidationError("rounding must be 'paper' or 'continuous'");
  }
  if (f.seed) c.seed = *f.seed;
  if (f.samples) {
    if (*f.samples < 1) throw ValidationError("--samples must be positive");
    c.samples = *f.samples;
  }
  category_partition(c.category_scheme, c.categories.size());

  if (sub != "criteria") {
    if (f.couples.empty()) throw ValidationError("--couples is required for '" + sub + "'");
    in.panel = load_couples(f.couples, c);
    if (!f.singles.empty()) load_singles(f.singles, c, *in.panel);
    if (c.method == Method::CSA && f.singles.empty() && sub != "indicators")
      throw ValidationError("method csa needs singles (--singles)");
  }
  if (!f.income.empty()) in.income = load_income(f.income);
  in.early_year = f.early;
  in.late_year = f.late;
  if (!f.indicator.empty()) in.indicator = parse_indicator(f.indicator);
  if (!f.state.empty()) in.state = f.state;
  return in;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Educational homophily indicators, counterfactual tables and trend classification"};
  app.require_subcommand(1);
  Flags f;

  const std::vector<std::pair<std::string, std::string>> subs{
      {"indicators", "Indicator values for every state and census year"},
      {"counterfactual", "Late association fitted to early margins, per state"},
      {"decompose", "Structural and nonstructural change per state and decade"},
      {"trend", "U-shape and income consistency of decade changes, plus cumulative series"},
      {"criteria", "Run the analytical criteria checkers and emit the verdict matrices"}};

  for (const auto& [name, help] : subs) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
    s->add_option("--out", f.out, "Output directory")->capture_default_str();
    s->add_option("--seed", f.seed, "Random seed for the criteria checkers");
    s->add_option("--rounding", f.rounding, "Rounding of R: paper or continuous");
    if (name == "criteria") {
      s->add_option("--samples", f.samples, "Random instances per criterion");
      continue;
    }
    s->add_option("--couples", f.couples, "Couples CSV (year,state,husband_edu,wife_edu,count)")
        ->check(CLI::ExistingFile);
    s->add_option("--singles", f.singles, "Singles CSV (year,state,sex,edu,count)")->check(CLI::ExistingFile);
    s->add_option("--income", f.income, "Top-10% income share CSV (state,year,top10_share)")
        ->check(CLI::ExistingFile);
    s->add_option("--method", f.method, "Counterfactual method: ipf, mdba, meda, csa or nm");
    s->add_option("--scheme", f.scheme, "Decomposition scheme: sequential or with-interaction");
    s->add_option("--categories", f.categories, "Category cut: three, hs or college");
    s->add_option("--early", f.early, "Early census year");
    s->add_option("--late", f.late, "Late census year");
    s->add_option("--indicator", f.indicator, "Indicator code or name, e.g. I9 or ll");
    s->add_option("--state", f.state, "Restrict output to one state");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    const auto inputs = build_inputs(sub, f);
    const auto result = homlab::run_command(sub, inputs);
    homlab::write_artifacts(result, f.out);
    for (const auto& a : result.artifacts) std::cout << f.out << '/' << a.name << '\n';
  } catch (const homlab::ParseError& e) {
    std::cerr << "homlab: parse error: " << e.what() << '\n';
    return 2;
  } catch (const homlab::ValidationError& e) {
    std::cerr << "homlab: invalid input: " << e.what() << '\n';
    return 2;
  } catch (const homlab::Error& e) {
    std::cerr << "homlab: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
