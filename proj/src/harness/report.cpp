#include "avsc/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "avsc/errors.hpp"

namespace avsc::harness {

namespace {

std::string clean(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

void write_rows(std::ostream& out, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  auto line = [&](const std::vector<std::string>& cols) {
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

std::string opt_value(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> table_header(const Table& t) {
  std::vector<std::string> h = t.key_names;
  h.insert(h.end(), kTableValueColumns.begin(), kTableValueColumns.end());
  return h;
}

std::vector<std::vector<std::string>> table_rows(const Table& t) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& cell : t.cells) {
    std::vector<std::string> keys;
    for (const auto& [_, v] : cell.keys) keys.push_back(clean(v));
    for (const auto& run : cell.runs) {
      auto r = keys;
      const bool ok = run.ok();
      r.insert(r.end(), {"run", std::to_string(run.seed), clean(run.status),
                         ok ? format_double(run.test.accuracy) : "nan",
                         ok ? format_double(run.test.logloss) : "nan", "", "", "",
                         opt_value(cell.paper_acc), opt_value(cell.paper_logloss)});
      rows.push_back(std::move(r));
    }
    auto r = keys;
    const auto& s = cell.summary;
    r.insert(r.end(), {"mean", "", s.runs == cell.runs.size() ? "ok" : "incomplete",
                       format_double(s.acc_mean), format_double(s.logloss_mean),
                       format_double(s.acc_sd), format_double(s.logloss_sd), std::to_string(s.runs),
                       opt_value(cell.paper_acc), opt_value(cell.paper_logloss)});
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_table_csv(const Table& t, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_rows(out, table_header(t), table_rows(t));
  write_meta(t.base, t.runner, path);
}

void write_history_csv(const std::vector<EpochLog>& history, const RunConfig& cfg,
                       const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : history) {
    std::vector<std::string> r{std::to_string(e.epoch), format_double(e.train.accuracy),
                               format_double(e.train.logloss), format_double(e.test.accuracy),
                               format_double(e.test.logloss)};
    for (double l : e.losses) r.push_back(format_double(l));
    r.push_back(format_double(e.total));
    rows.push_back(std::move(r));
  }
  auto out = open_out(path);
  write_rows(out, kHistoryColumns, rows);
  write_meta(cfg, "train", path);
}

void write_meta(const RunConfig& cfg, const std::string& runner, const std::filesystem::path& csv_path) {
  nlohmann::json j;
  j["runner"] = runner;
  j["accuracy"] = to_string(cfg.accuracy);
  j["optimizer"] = {{"name", "adamw"},
                    {"lr", cfg.optimizer.lr},
                    {"beta1", cfg.optimizer.beta1},
                    {"beta2", cfg.optimizer.beta2},
                    {"eps", cfg.optimizer.eps},
                    {"weight_decay", cfg.optimizer.weight_decay}};
  j["config"] = to_json(cfg);
  auto out = open_out(csv_path.string() + ".meta.json");
  out << j.dump(2) << '\n';
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (!line.empty() && line.back() == ',') cols.emplace_back();
    rows.push_back(std::move(cols));
  }
  return rows;
}

}  // namespace avsc::harness
