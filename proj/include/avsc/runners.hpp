#pragma once

// Experiment protocols at desk scale: module ablation, K x mode sweep, loss
// weight sweep and modality ablation. Each cell runs R seeds
// (cfg.seed, cfg.seed + 1, ...). Published values ride along as reference
// columns and are never compared against.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "avsc/config.hpp"
#include "avsc/metrics.hpp"
#include "avsc/synthdata.hpp"

namespace avsc::harness {

struct RunRecord {
  std::uint64_t seed = 0;
  std::string status = "ok";  // otherwise the error message
  Metrics test;
  bool ok() const { return status == "ok"; }
};

struct Summary {
  std::size_t runs = 0;  // successful runs
  double acc_mean = 0.0, acc_sd = 0.0;
  double logloss_mean = 0.0, logloss_sd = 0.0;
};

/// Mean and sample standard deviation (n - 1; zero for a single run) over
/// successful runs.
Summary summarize(const std::vector<RunRecord>& runs);

struct Cell {
  std::vector<std::pair<std::string, std::string>> keys;  // leading CSV columns
  RunConfig config;
  std::vector<RunRecord> runs;
  Summary summary;
  std::optional<double> paper_acc;      // percent
  std::optional<double> paper_logloss;
};

struct Table {
  std::string runner;
  std::vector<std::string> key_names;
  std::vector<Cell> cells;
  RunConfig base;
  std::size_t repeats = 0;
};

struct RunnerOptions {
  std::size_t repeats = 10;
  const data::Dataset* dataset = nullptr;  // shared across cells when given
  std::function<void(const Cell&, const RunRecord&)> progress;
};

// Published reference values.
struct PaperRow {
  double acc;
  double logloss;
};
inline constexpr std::array<std::size_t, 7> kPaperKValues{1, 5, 10, 15, 20, 25, 30};
inline constexpr std::array<double, 7> kPaperAccLowestK{89.32, 90.12, 90.83, 91.58, 91.38, 91.00, 90.91};
inline constexpr std::array<double, 7> kPaperAccRandomK{91.00, 91.11, 91.30, 91.27, 91.22, 91.08, 91.05};
inline constexpr std::array<PaperRow, 4> kPaperAblation{{{88.42, 0.439}, {90.34, 0.390}, {90.75, 0.357}, {91.58, 0.259}}};
inline constexpr std::array<PaperRow, 3> kPaperModality{{{73.55, 0.871}, {88.86, 0.518}, {94.10, 0.192}}};

struct LambdaCombo {
  std::array<double, 5> lambda;
  std::optional<PaperRow> paper;
};

/// The twelve published weight combinations with their reported results.
std::vector<LambdaCombo> paper_lambda_combos();
/// JSON: [{"lambda": [l1..l5], "paper_acc": .., "paper_logloss": ..}, ...]
std::vector<LambdaCombo> load_lambda_combos(const std::filesystem::path& path);

/// backbone / +SF / +CEOA / +SF+CEOA.
Table ablate(const RunConfig& cfg, const RunnerOptions& opt = {});

/// |k_values| x |modes| cells. Invalid K yields a row whose status holds the
/// config error; the remaining cells still run.
Table sweep_k(const RunConfig& cfg, const std::vector<std::size_t>& k_values,
              const std::vector<ceoa::NegativeMode>& modes, const RunnerOptions& opt = {});

/// One cell per combo. Any negative or non-finite weight throws ConfigError
/// before anything runs.
Table sweep_lambda(const RunConfig& cfg, const std::vector<LambdaCombo>& combos,
                   const RunnerOptions& opt = {});

/// audio-only / visual-only / both.
Table ablate_modality(const RunConfig& cfg, const RunnerOptions& opt = {});

}  // namespace avsc::harness
