#pragma once

// CSV reports. Every float is printed with %.17g so values parse back to the
// same doubles. Each CSV gets a sidecar <file>.meta.json recording the
// optimizer settings, the accuracy convention and the full run config.

#include <filesystem>
#include <string>
#include <vector>

#include "avsc/runners.hpp"
#include "avsc/train.hpp"

namespace avsc::harness {

std::string format_double(double v);  // %.17g; "nan" / "inf" / "-inf"

/// Fixed columns after the runner's key columns.
inline const std::vector<std::string> kTableValueColumns{
    "row_type", "seed", "status", "acc", "logloss", "acc_sd", "logloss_sd", "runs",
    "paper_acc_pct", "paper_logloss"};

std::vector<std::string> table_header(const Table& t);
/// One "run" row per (cell, seed), then one "mean" row per cell.
std::vector<std::vector<std::string>> table_rows(const Table& t);
void write_table_csv(const Table& t, const std::filesystem::path& path);

inline const std::vector<std::string> kHistoryColumns{
    "epoch", "train_acc", "train_logloss", "test_acc", "test_logloss", "loss_e",
    "loss_o", "loss_e2o", "loss_o2e", "loss_s", "loss_total"};

void write_history_csv(const std::vector<EpochLog>& history, const RunConfig& cfg,
                       const std::filesystem::path& path);

/// Sidecar metadata written next to every report.
void write_meta(const RunConfig& cfg, const std::string& runner, const std::filesystem::path& csv_path);

/// Minimal CSV reader for the files written here (no quoting).
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace avsc::harness
