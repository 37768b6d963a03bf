#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "drn/cli/run_config.hpp"

namespace drn {

struct TrainTest {
  Dataset train;
  Dataset test;
};

/// Loads the configured corpus and applies `subset`.
TrainTest load_datasets(const RunConfig& config);

/// Cell source named by the `cell` key: gru, lstm, a preset name or a
/// genotype file. Sets the cell kind of `network` accordingly.
CellSource<float> resolve_cells(const RunConfig& config, NetworkConfig& network);

/// Each command validates the config, writes a frozen copy to
/// `out/config.txt`, then runs. Return value is the process exit code.
int cmd_search(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
int cmd_train(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
/// Rebuilds the network of a finished `train` run and scores the test split.
int cmd_eval(const std::filesystem::path& run_dir, const RunConfig* overrides, std::ostream& log);
/// `source` is a genotype file or a preset name; empty `out` prints to `log`.
int cmd_export_dot(const std::string& source, const std::filesystem::path& out, std::ostream& log);
int cmd_selftest(std::ostream& log);

/// Applies the `threads` key.
void apply_threads(const RunConfig& config);

}  // namespace drn
