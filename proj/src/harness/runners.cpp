#include "avsc/runners.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "avsc/errors.hpp"
#include "avsc/report.hpp"
#include "avsc/train.hpp"

namespace avsc::harness {

namespace {

void run_cell(Cell& cell, const RunnerOptions& opt, std::optional<std::string> invalid = {}) {
  for (std::size_t r = 0; r < opt.repeats; ++r) {
    RunRecord rec;
    rec.seed = cell.config.seed + r;
    if (invalid) {
      rec.status = *invalid;
    } else {
      RunConfig c = cell.config;
      c.seed = rec.seed;
      try {
        rec.test = train(c, opt.dataset).test;
      } catch (const DivergenceError& e) {
        rec.status = std::string("diverged: ") + e.what();
      }
    }
    cell.runs.push_back(rec);
    if (opt.progress) opt.progress(cell, rec);
  }
  cell.summary = summarize(cell.runs);
}

Table make_table(std::string runner, std::vector<std::string> keys, const RunConfig& cfg,
                 const RunnerOptions& opt) {
  if (opt.repeats == 0) throw ConfigError("runner: repeats must be >= 1");
  Table t;
  t.runner = std::move(runner);
  t.key_names = std::move(keys);
  t.base = cfg;
  t.repeats = opt.repeats;
  return t;
}

}  // namespace

Summary summarize(const std::vector<RunRecord>& runs) {
  Summary s;
  std::vector<const RunRecord*> ok;
  for (const auto& r : runs)
    if (r.ok()) ok.push_back(&r);
  s.runs = ok.size();
  if (ok.empty()) {
    s.acc_mean = s.acc_sd = s.logloss_mean = s.logloss_sd = std::nan("");
    return s;
  }
  const double n = static_cast<double>(ok.size());
  for (const auto* r : ok) {
    s.acc_mean += r->test.accuracy;
    s.logloss_mean += r->test.logloss;
  }
  s.acc_mean /= n;
  s.logloss_mean /= n;
  if (ok.size() > 1) {
    for (const auto* r : ok) {
      s.acc_sd += (r->test.accuracy - s.acc_mean) * (r->test.accuracy - s.acc_mean);
      s.logloss_sd += (r->test.logloss - s.logloss_mean) * (r->test.logloss - s.logloss_mean);
    }
    s.acc_sd = std::sqrt(s.acc_sd / (n - 1.0));
    s.logloss_sd = std::sqrt(s.logloss_sd / (n - 1.0));
  }
  return s;
}

std::vector<LambdaCombo> paper_lambda_combos() {
  return {
      {{1, 1, 1, 1, 1}, PaperRow{91.58, 0.259}},
      {{0.5, 1, 1, 1, 1}, PaperRow{91.82, 0.258}},
      {{0.5, 0.5, 1, 1, 1}, PaperRow{92.20, 0.237}},
      {{0.25, 0.5, 1, 1, 1}, PaperRow{93.06, 0.226}},
      {{0.25, 0.5, 0.25, 1, 1}, PaperRow{93.71, 0.222}},
      {{0.25, 0.5, 0.25, 0.5, 1}, PaperRow{94.10, 0.192}},
      {{0.25, 0.5, 0.01, 0.01, 1}, PaperRow{93.99, 0.193}},
      {{0.05, 0.25, 0.05, 0.25, 1}, PaperRow{93.44, 0.254}},
      {{0.01, 0.5, 0.01, 0.01, 1}, PaperRow{93.52, 0.209}},
      {{0.01, 0.1, 0.01, 0.1, 1}, PaperRow{93.33, 0.246}},
      {{0.01, 0.01, 0.05, 0.1, 1}, PaperRow{94.02, 0.193}},
      {{0.005, 0.1, 0.025, 0.1, 1}, PaperRow{93.41, 0.219}},
  };
}

std::vector<LambdaCombo> load_lambda_combos(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open combo file " + path.string());
  std::vector<LambdaCombo> out;
  try {
    const auto j = nlohmann::json::parse(in);
    for (const auto& e : j) {
      LambdaCombo c{e.at("lambda").get<std::array<double, 5>>(), std::nullopt};
      if (e.contains("paper_acc") && e.contains("paper_logloss"))
        c.paper = PaperRow{e.at("paper_acc").get<double>(), e.at("paper_logloss").get<double>()};
      for (const auto& [key, _] : e.items())
        if (key != "lambda" && key != "paper_acc" && key != "paper_logloss")
          throw ConfigError("combo file: unknown key '" + key + "'");
      out.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("combo file " + path.string() + ": " + e.what());
  }
  if (out.empty()) throw ConfigError("combo file " + path.string() + " lists no combinations");
  return out;
}

Table ablate(const RunConfig& cfg, const RunnerOptions& opt) {
  Table t = make_table("ablate", {"config", "sf", "ceoa"}, cfg, opt);
  const char* labels[] = {"backbone", "+SF", "+CEOA", "+SF+CEOA"};
  for (int row = 0; row < 4; ++row) {
    Cell cell;
    cell.config = cfg;
    cell.config.model.modality = Modality::kBoth;
    cell.config.fusion.enabled = row == 1 || row == 3;
    cell.config.contrastive.enabled = row == 2 || row == 3;
    cell.config.validate();
    cell.keys = {{"config", labels[row]},
                 {"sf", cell.config.fusion.enabled ? "1" : "0"},
                 {"ceoa", cell.config.contrastive.enabled ? "1" : "0"}};
    cell.paper_acc = kPaperAblation[row].acc;
    cell.paper_logloss = kPaperAblation[row].logloss;
    t.cells.push_back(std::move(cell));
  }
  for (auto& c : t.cells) run_cell(c, opt);
  return t;
}

Table sweep_k(const RunConfig& cfg, const std::vector<std::size_t>& k_values,
              const std::vector<ceoa::NegativeMode>& modes, const RunnerOptions& opt) {
  Table t = make_table("sweep-k", {"k", "mode"}, cfg, opt);
  if (k_values.empty() || modes.empty()) throw ConfigError("sweep-k: empty K or mode list");
  for (auto mode : modes)
    for (std::size_t k : k_values) {
      Cell cell;
      cell.config = cfg;
      cell.config.contrastive.enabled = true;
      cell.config.contrastive.k = k;
      cell.config.contrastive.mode = mode;
      cell.keys = {{"k", std::to_string(k)}, {"mode", ceoa::to_string(mode)}};
      for (std::size_t i = 0; i < kPaperKValues.size(); ++i)
        if (kPaperKValues[i] == k)
          cell.paper_acc = mode == ceoa::NegativeMode::kLowestK ? kPaperAccLowestK[i] : kPaperAccRandomK[i];
      std::optional<std::string> invalid;
      try {
        cell.config.validate();
      } catch (const std::invalid_argument& e) {
        invalid = std::string("config error: ") + e.what();
      }
      run_cell(cell, opt, invalid);
      t.cells.push_back(std::move(cell));
    }
  return t;
}

Table sweep_lambda(const RunConfig& cfg, const std::vector<LambdaCombo>& combos,
                   const RunnerOptions& opt) {
  Table t = make_table("sweep-lambda", {"combo", "lambda1", "lambda2", "lambda3", "lambda4", "lambda5"},
                       cfg, opt);
  if (combos.empty()) throw ConfigError("sweep-lambda: no combinations");
  for (std::size_t i = 0; i < combos.size(); ++i) {
    Cell cell;
    cell.config = cfg;
    cell.config.lambda = combos[i].lambda;
    cell.config.validate();  // negative weights stop the sweep here
    cell.keys = {{"combo", std::to_string(i + 1)}};
    for (std::size_t l = 0; l < 5; ++l)
      cell.keys.emplace_back("lambda" + std::to_string(l + 1), format_double(combos[i].lambda[l]));
    if (combos[i].paper) {
      cell.paper_acc = combos[i].paper->acc;
      cell.paper_logloss = combos[i].paper->logloss;
    }
    t.cells.push_back(std::move(cell));
  }
  for (auto& c : t.cells) run_cell(c, opt);
  return t;
}

Table ablate_modality(const RunConfig& cfg, const RunnerOptions& opt) {
  Table t = make_table("ablate-modality", {"modality"}, cfg, opt);
  const Modality rows[] = {Modality::kAudio, Modality::kVisual, Modality::kBoth};
  for (int row = 0; row < 3; ++row) {
    Cell cell;
    cell.config = cfg;
    cell.config.model.modality = rows[row];
    cell.config.validate();
    cell.keys = {{"modality", to_string(rows[row])}};
    cell.paper_acc = kPaperModality[row].acc;
    cell.paper_logloss = kPaperModality[row].logloss;
    t.cells.push_back(std::move(cell));
  }
  for (auto& c : t.cells) run_cell(c, opt);
  return t;
}

}  // namespace avsc::harness
