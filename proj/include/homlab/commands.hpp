#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "homlab/criteria.hpp"
#include "homlab/io.hpp"

namespace homlab {

struct CommandInputs {
  RunConfig config;
  /// Raw couples panel; required by every subcommand except criteria.
  std::optional<PanelDataset> panel;
  std::vector<IncomeLevel> income;
  std::optional<int> early_year;
  std::optional<int> late_year;
  /// indicators: restrict output; trend: use the indicator change as measure.
  std::optional<Indicator> indicator;
  /// Restrict per-state output to this state (and the national table).
  std::optional<std::string> state;
};

struct Artifact {
  std::string name;
  std::string content;
};

struct CommandResult {
  std::vector<Artifact> artifacts;
};

CommandResult run_indicators(const CommandInputs& in);
CommandResult run_counterfactual(const CommandInputs& in);
CommandResult run_decompose(const CommandInputs& in);
CommandResult run_trend(const CommandInputs& in);
CommandResult run_criteria(const CommandInputs& in);

/// Dispatches on "indicators", "counterfactual", "decompose", "trend", "criteria".
CommandResult run_command(std::string_view subcommand, const CommandInputs& in);

/// Panel after the category cut, with the national aggregate added.
PanelDataset prepare_panel(const PanelDataset& raw, const RunConfig& config);

/// Writes every artifact under `dir`, creating it if needed; throws Error on I/O failure.
void write_artifacts(const CommandResult& result, const std::string& dir);

}  // namespace homlab
