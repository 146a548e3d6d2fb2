// avsc: train, evaluate and run the experiment protocols from the command line.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avsc/checkpoint.hpp"
#include "avsc/diagnostics.hpp"
#include "avsc/errors.hpp"
#include "avsc/kernels.hpp"
#include "avsc/projection.hpp"
#include "avsc/report.hpp"
#include "avsc/runners.hpp"
#include "avsc/synthdata.hpp"
#include "avsc/train.hpp"

namespace fs = std::filesystem;
using namespace avsc;
using namespace avsc::harness;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string preset = "desk";
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run config (overlaid on the preset)");
  cmd->add_option("--seed", c.seed, "Run seed (overrides the config)");
  cmd->add_option("--out", c.out, "Output directory (overrides out_dir)");
  cmd->add_option("--preset", c.preset, "Hyperparameter preset")->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_flag("-q,--quiet", c.quiet, "Suppress progress output");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = preset(c.preset);
  if (!c.config.empty()) cfg = load_config(c.config, cfg);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.out_dir = c.out;
  cfg.validate();
  return cfg;
}

fs::path out_dir(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  return cfg.out_dir;
}

void print_metrics(const std::string& what, const Metrics& m) {
  std::printf("%s acc=%s logloss=%s\n", what.c_str(), format_double(m.accuracy).c_str(),
              format_double(m.logloss).c_str());
}

RunnerOptions runner_options(std::size_t repeats, bool quiet, const data::Dataset* ds) {
  RunnerOptions opt;
  opt.repeats = repeats;
  opt.dataset = ds;
  if (!quiet)
    opt.progress = [](const Cell& cell, const RunRecord& r) {
      std::string key;
      for (const auto& [k, v] : cell.keys) key += k + "=" + v + " ";
      std::fprintf(stderr, "%sseed=%llu %s acc=%.4f logloss=%.4f\n", key.c_str(),
                   static_cast<unsigned long long>(r.seed), r.status.c_str(), r.test.accuracy,
                   r.test.logloss);
    };
  return opt;
}

void print_table(const Table& t) {
  for (const auto& cell : t.cells) {
    std::string key;
    for (const auto& [k, v] : cell.keys) key += k + "=" + v + " ";
    std::printf("%-40s acc=%.4f±%.4f logloss=%.4f±%.4f (%zu runs)\n", key.c_str(),
                cell.summary.acc_mean, cell.summary.acc_sd, cell.summary.logloss_mean,
                cell.summary.logloss_sd, cell.summary.runs);
  }
}

template <class T>
std::vector<T> parse_list(const std::string& text, T (*parse)(const std::string&)) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse(item));
  return out;
}

std::size_t parse_size(const std::string& s) {
  std::size_t pos = 0;
  const unsigned long long v = std::stoull(s, &pos);
  if (pos != s.size()) throw ConfigError("not an integer: '" + s + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audio-visual scene classification with event-object alignment and semantic fusion"};
  app.require_subcommand(1);

  Common c_train, c_eval, c_abl, c_k, c_lam, c_mod, c_gen, c_proj, c_gc;

  auto* train_cmd = app.add_subcommand("train", "Train one model; writes history.csv and checkpoint.json");
  add_common(train_cmd, c_train);

  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on a split");
  add_common(eval_cmd, c_eval);
  std::string ckpt_path, split = "test", dataset_path;
  eval_cmd->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
  eval_cmd->add_option("--split", split)->check(CLI::IsMember({"train", "test", "all"}));
  eval_cmd->add_option("--dataset", dataset_path, "Dataset file from gen-data (default: regenerate)");

  std::size_t repeats = 10;
  auto* abl_cmd = app.add_subcommand("ablate", "Module ablation: backbone / +SF / +CEOA / +SF+CEOA");
  add_common(abl_cmd, c_abl);
  abl_cmd->add_option("--repeats", repeats, "Seeds per row");

  auto* k_cmd = app.add_subcommand("sweep-k", "Grid over K and negative-selection mode");
  add_common(k_cmd, c_k);
  std::string k_list = "1,5,10,15,20,25,30", mode_list = "LKM,RKM";
  k_cmd->add_option("--k", k_list, "Comma-separated K values");
  k_cmd->add_option("--modes", mode_list, "Comma-separated modes (LKM, RKM)");
  k_cmd->add_option("--repeats", repeats, "Seeds per cell");

  auto* lam_cmd = app.add_subcommand("sweep-lambda", "Loss-weight combinations");
  add_common(lam_cmd, c_lam);
  std::string combos_path;
  lam_cmd->add_option("--combos", combos_path, "Combo file (default: the twelve published combos)");
  lam_cmd->add_option("--repeats", repeats, "Seeds per combo");

  auto* mod_cmd = app.add_subcommand("ablate-modality", "audio-only / visual-only / both");
  add_common(mod_cmd, c_mod);
  mod_cmd->add_option("--repeats", repeats, "Seeds per row");

  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference checks of every op and the full loss");
  add_common(gc_cmd, c_gc);
  std::size_t gc_seeds = 10;
  bool elementwise = false;
  gc_cmd->add_option("--seeds", gc_seeds, "Number of seeds");
  gc_cmd->add_flag("--elementwise", elementwise, "Element-wise composite check (diagnostic)");

  auto* gen_cmd = app.add_subcommand("gen-data", "Generate and export the synthetic dataset");
  add_common(gen_cmd, c_gen);

  auto* proj_cmd = app.add_subcommand("project-weights", "2-D PCA of event and object head rows");
  add_common(proj_cmd, c_proj);
  proj_cmd->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      const RunConfig cfg = resolve(c_train);
      const fs::path dir = out_dir(cfg);
      std::fprintf(stderr, "kernels: %s\n", std::string(kernels::active().name).c_str());
      auto result = train(cfg, nullptr, [&](const EpochLog& e) {
        if (!c_train.quiet)
          std::fprintf(stderr, "epoch %zu train_acc=%.4f test_acc=%.4f test_logloss=%.4f loss=%.4f\n",
                       e.epoch, e.train.accuracy, e.test.accuracy, e.test.logloss, e.total);
      });
      write_history_csv(result.history, cfg, dir / "history.csv");
      save_checkpoint(result.checkpoint, dir / "checkpoint.json");
      print_metrics("test", result.test);
    } else if (*eval_cmd) {
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      std::optional<data::Dataset> ds;
      if (!dataset_path.empty()) ds = data::load_dataset(dataset_path);
      print_metrics(split, evaluate(ckpt, parse_split(split), ds ? &*ds : nullptr));
    } else if (*abl_cmd) {
      const RunConfig cfg = resolve(c_abl);
      const auto ds = build_dataset(cfg);
      const Table t = ablate(cfg, runner_options(repeats, c_abl.quiet, &ds));
      write_table_csv(t, out_dir(cfg) / "ablate.csv");
      print_table(t);
    } else if (*k_cmd) {
      const RunConfig cfg = resolve(c_k);
      const auto ds = build_dataset(cfg);
      const auto ks = parse_list<std::size_t>(k_list, parse_size);
      const auto modes = parse_list<ceoa::NegativeMode>(mode_list, ceoa::parse_mode);
      const Table t = sweep_k(cfg, ks, modes, runner_options(repeats, c_k.quiet, &ds));
      write_table_csv(t, out_dir(cfg) / "sweep_k.csv");
      print_table(t);
    } else if (*lam_cmd) {
      const RunConfig cfg = resolve(c_lam);
      const auto combos = combos_path.empty() ? paper_lambda_combos() : load_lambda_combos(combos_path);
      const auto ds = build_dataset(cfg);
      const Table t = sweep_lambda(cfg, combos, runner_options(repeats, c_lam.quiet, &ds));
      write_table_csv(t, out_dir(cfg) / "sweep_lambda.csv");
      print_table(t);
    } else if (*mod_cmd) {
      const RunConfig cfg = resolve(c_mod);
      const auto ds = build_dataset(cfg);
      const Table t = ablate_modality(cfg, runner_options(repeats, c_mod.quiet, &ds));
      write_table_csv(t, out_dir(cfg) / "ablate_modality.csv");
      print_table(t);
    } else if (*gc_cmd) {
      const RunConfig cfg = resolve(c_gc);
      bool ok = true;
      for (std::size_t s = 0; s < gc_seeds; ++s) {
        const std::uint64_t seed = cfg.seed + s;
        double worst = 0.0;
        std::string worst_name;
        for (const auto& chk : check_ops(seed)) {
          ok = ok && chk.report.passed;
          if (chk.report.max_rel_error >= worst) {
            worst = chk.report.max_rel_error;
            worst_name = chk.name;
          }
          if (!chk.report.passed)
            std::printf("FAIL op %s seed %llu rel_err=%.3g\n", chk.name.c_str(),
                        static_cast<unsigned long long>(seed), chk.report.max_rel_error);
        }
        const auto mode = elementwise ? CompositeMode::kElementwise : CompositeMode::kDirectional;
        const auto comp = check_composite(seed, cfg.model.activation, mode);
        ok = ok && comp.passed;
        std::printf("seed %llu ops max_rel_err=%.3g (%s) composite max_rel_err=%.3g %s\n",
                    static_cast<unsigned long long>(seed), worst, worst_name.c_str(),
                    comp.max_rel_error, comp.passed ? "pass" : "FAIL");
      }
      std::printf("%s\n", ok ? "gradcheck passed" : "gradcheck FAILED");
      return ok ? 0 : 1;
    } else if (*gen_cmd) {
      const RunConfig cfg = resolve(c_gen);
      const auto ds = build_dataset(cfg);
      const fs::path path = out_dir(cfg) / "dataset.bin";
      data::save_dataset(ds, path);
      std::printf("wrote %s: %zu samples (%zu train, %zu test)\n", path.c_str(), ds.samples.size(),
                  ds.train.size(), ds.test.size());
    } else if (*proj_cmd) {
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      const Projection p = export_projection(ckpt);
      for (const auto& w : p.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      RunConfig cfg = ckpt.config;
      if (!c_proj.out.empty()) cfg.out_dir = c_proj.out;
      const fs::path path = out_dir(cfg) / "projection.csv";
      write_projection_csv(p, path);
      std::printf("wrote %s (eigenvalues %.6g, %.6g)\n", path.c_str(), p.eigenvalues[0], p.eigenvalues[1]);
    }
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "diverged: %s (last finite epoch %d)\n", e.what(), e.last_finite_epoch());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
