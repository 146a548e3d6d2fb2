// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "avsc/branches.hpp"
#include "avsc/ceoa.hpp"
#include "avsc/checkpoint.hpp"
#include "avsc/diagnostics.hpp"
#include "avsc/fusion.hpp"
#include "avsc/metrics.hpp"
#include "avsc/model.hpp"
#include "avsc/ops.hpp"
#include "avsc/report.hpp"
#include "avsc/runners.hpp"
#include "avsc/train.hpp"
#include "oracles.hpp"

using namespace avsc;
using namespace avsc::harness;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> uniform(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

int failures = 0;

void report(int id, const std::string& title, const Outcome& o) {
  std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void guarded(int id, const std::string& title, const std::function<Outcome()>& body) {
  try {
    report(id, title, body());
  } catch (const std::exception& e) {
    Outcome o;
    o.require(false, std::string("exception: ") + e.what());
    report(id, title, o);
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// ---------------------------------------------------------------------------

Outcome gradients() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst_op = 0.0, worst_composite = 0.0;
  std::string worst_op_name;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (const auto& c : check_ops(seed, 1e-5, 1e-4))
      if (c.report.max_rel_error > worst_op || std::isnan(c.report.max_rel_error)) {
        worst_op = c.report.max_rel_error;
        worst_op_name = c.name;
      }
    for (auto act : {branches::Activation::kRelu, branches::Activation::kGelu})
      worst_composite = std::max(worst_composite, check_composite(seed, act, CompositeMode::kDirectional,
                                                                  1e-5, 1e-4).max_rel_error);
  }
  const double secs = seconds_since(t0);
  o.require(worst_op <= 1e-4, fmt("op %s rel err %.3g > 1e-4", worst_op_name.c_str(), worst_op));
  o.require(worst_composite <= 1e-4, fmt("composite rel err %.3g > 1e-4", worst_composite));
  o.require(secs < 30.0, fmt("runtime %.1f s >= 30 s", secs));
  o.note(fmt("10 seeds, ops max rel err %.2e (%s), composite max rel err %.2e, %.1f s", worst_op,
             worst_op_name.c_str(), worst_composite, secs));
  return o;
}

Outcome identities() {
  Outcome o;
  const RunConfig desk = preset("desk");
  const std::size_t C = desk.data.num_events, Cs = desk.data.num_scenes;
  std::vector<double> y(C, 0.0);
  for (std::size_t i = 0; i < C; i += 3) y[i] = 1.0;
  const double bce = branches::bce_loss(num::Tensor::full({C, 1}, 0.5), num::Tensor::column(y)).item();
  const double bce_err = std::abs(bce - static_cast<double>(C) * std::log(2.0));
  o.require(bce_err <= 1e-10, fmt("BCE error %.3g", bce_err));

  std::vector<double> one_hot(Cs, 0.0);
  one_hot[1] = 1.0;
  const double ce = fusion::ce_loss(fusion::scene_prediction(num::Tensor::full({1, Cs}, 0.7)), one_hot).item();
  const double ce_err = std::abs(ce - std::log(static_cast<double>(Cs)));
  o.require(ce_err <= 1e-10, fmt("CE error %.3g", ce_err));

  std::mt19937_64 rng(31);
  double zero_gap_err = 0.0, form_err = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 1 + rng() % 5, d = 1 + rng() % 8;
    ceoa::ContrastiveBank bank;
    bank.pos_events = num::Tensor({k, d}, uniform(k * d, rng));
    bank.pos_objects = num::Tensor({k, d}, uniform(k * d, rng));
    bank.neg_events = bank.pos_events;
    bank.neg_objects = bank.pos_objects;
    zero_gap_err = std::max({zero_gap_err, std::abs(ceoa::contrastive_loss_e2o(bank).item() - std::log(2.0)),
                             std::abs(ceoa::contrastive_loss_o2e(bank).item() - std::log(2.0))});

    const auto a = uniform(k * d, rng), p = uniform(k * d, rng), n = uniform(k * d, rng);
    const double got = ceoa::pairwise_contrastive(num::Tensor({k, d}, a), num::Tensor({k, d}, p),
                                                   num::Tensor({k, d}, n)).item();
    const double sig = oracle::contrastive(a, p, n, k, d, false), quo = oracle::contrastive(a, p, n, k, d, true);
    form_err = std::max({form_err, std::abs(sig - quo), std::abs(got - sig), std::abs(got - quo)});
  }
  o.require(zero_gap_err <= 1e-12, fmt("zero-gap error %.3g", zero_gap_err));
  o.require(form_err <= 1e-12, fmt("algebraic forms differ by %.3g", form_err));
  o.note(fmt("BCE %.1e, CE %.1e, zero-gap %.1e, two forms %.1e", bce_err, ce_err, zero_gap_err, form_err));
  return o;
}

Outcome oracles() {
  Outcome o;
  std::mt19937_64 rng(2024), rkm(17);
  std::size_t lkm_bad = 0, rkm_bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 6 + rng() % 60, k = 1 + rng() % (n / 2);
    const auto p = uniform(n, rng, 0.0, 1.0);
    const auto top = oracle::top_k(p, k, true), bottom = oracle::top_k(p, k, false);
    auto l = ceoa::select_indices(p, k, ceoa::NegativeMode::kLowestK, nullptr);
    std::sort(l.positive.begin(), l.positive.end());
    std::sort(l.negative.begin(), l.negative.end());
    lkm_bad += l.positive != top || l.negative != bottom;
    auto r = ceoa::select_indices(p, k, ceoa::NegativeMode::kRandomK, &rkm);
    std::sort(r.positive.begin(), r.positive.end());
    const std::set<std::size_t> neg(r.negative.begin(), r.negative.end());
    bool ok = r.positive == top && neg.size() == k;
    for (std::size_t i : neg) ok = ok && i < n && !std::binary_search(top.begin(), top.end(), i);
    rkm_bad += !ok;
  }
  o.require(lkm_bad == 0, fmt("%zu LKM mismatches", lkm_bad));
  o.require(rkm_bad == 0, fmt("%zu RKM mismatches", rkm_bad));

  double mm_err = 0.0;
  for (std::size_t m = 1; m <= 16; m += 3)
    for (std::size_t k = 1; k <= 16; k += 5)
      for (std::size_t n = 1; n <= 16; n += 4) {
        const auto a = uniform(m * k, rng), b = uniform(k * n, rng);
        const auto got = num::matmul(num::Tensor({m, k}, a), num::Tensor({k, n}, b)).to_vector();
        const auto want = oracle::matmul(a, b, m, k, n);
        for (std::size_t i = 0; i < got.size(); ++i) mm_err = std::max(mm_err, std::abs(got[i] - want[i]));
      }
  o.require(mm_err <= 1e-12, fmt("matmul error %.3g", mm_err));

  double mha_err = 0.0;
  for (int t = 0; t < 50; ++t) {
    model::ParamSet ps;
    const auto p = fusion::MhaParams::create(1 + rng() % 3, 1 + rng() % 4, ps, rng, "m.");
    const std::size_t nq = 1 + rng() % 16, nk = 1 + rng() % 16;
    const auto q = uniform(nq, rng, -3, 3), k = uniform(nk, rng, -3, 3), v = uniform(nk, rng, -3, 3);
    const auto got = fusion::mha(num::Tensor::column(q), num::Tensor::column(k), num::Tensor::column(v), p).to_vector();
    const auto want = oracle::mha(q, k, v, p);
    for (std::size_t i = 0; i < nq; ++i) mha_err = std::max(mha_err, std::abs(got[i] - want[i]));
  }
  o.require(mha_err <= 1e-12, fmt("MHA error %.3g", mha_err));

  std::size_t metric_bad = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t C = 2 + rng() % 6, n = 1 + rng() % 100;
    std::vector<std::vector<double>> probs(n);
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      probs[i] = uniform(C, rng, 0.0, 1.0);
      double s = 0.0;
      for (double x : probs[i]) s += x;
      for (double& x : probs[i]) x /= s;
      labels[i] = rng() % C;
    }
    const auto want = oracle::recount(probs, labels, C);
    const auto macro = compute_metrics(probs, labels, C, Averaging::kMacro);
    const auto micro = compute_metrics(probs, labels, C, Averaging::kMicro);
    metric_bad += macro.accuracy != want.macro || micro.accuracy != want.micro ||
                  std::abs(macro.logloss - want.logloss) > 1e-12;
  }
  o.require(metric_bad == 0, fmt("%zu metric mismatches", metric_bad));
  o.note(fmt("selection 1000/1000 LKM+RKM, matmul %.1e, MHA %.1e, metrics recount exact on 200 sets", mm_err,
             mha_err));
  return o;
}

Outcome attention_rows() {
  Outcome o;
  std::mt19937_64 rng(5);
  const RunConfig cfg = preset("desk");
  double worst = 0.0;
  bool negative = false;
  for (int t = 0; t < 100; ++t) {
    model::ParamSet ps;
    const auto p = fusion::MhaParams::create(cfg.fusion.heads, cfg.fusion.head_dim, ps, rng, "m.");
    std::vector<num::Tensor> attn;
    const double spread = t < 50 ? 3.0 : 30.0;
    fusion::mha(num::Tensor::column(uniform(cfg.data.num_objects, rng, -spread, spread)),
                num::Tensor::column(uniform(cfg.data.num_events, rng, -spread, spread)),
                num::Tensor::column(uniform(cfg.data.num_events, rng)), p, &attn);
    for (const auto& a : attn)
      for (std::size_t r = 0; r < a.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < a.cols(); ++c) {
          s += a.at(r, c);
          negative = negative || a.at(r, c) < 0.0;
        }
        worst = std::max(worst, std::abs(s - 1.0));
      }
  }
  o.require(worst <= 1e-12, fmt("row sum error %.3g", worst));
  o.require(!negative, "negative attention weight");
  o.note(fmt("100 passes, max |row sum - 1| = %.2e", worst));
  return o;
}

// Shared by criteria 5 and 6: the full model on the default dataset.
struct FullRuns {
  std::vector<double> acc;
  bool done = false;
};
FullRuns full_runs;

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::vector<double> run_seeds(RunConfig cfg, const data::Dataset& ds, std::size_t seeds) {
  std::vector<double> acc;
  for (std::size_t s = 0; s < seeds; ++s) {
    cfg.seed = 1 + s;
    acc.push_back(train(cfg, &ds).test.accuracy);
  }
  return acc;
}

Outcome ablation_trend() {
  Outcome o;
  const auto t0 = Clock::now();
  const RunConfig full = preset("desk");
  const data::Dataset ds = build_dataset(full);
  RunConfig backbone = full;
  backbone.fusion.enabled = false;
  backbone.contrastive.enabled = false;

  full_runs.acc = run_seeds(full, ds, 10);
  full_runs.done = true;
  const auto base = run_seeds(backbone, ds, 10);
  const double m_full = mean(full_runs.acc), m_base = mean(base);
  o.require(m_full >= m_base, fmt("mean acc full %.4f < backbone %.4f", m_full, m_base));

  RunConfig scene_only = full;
  scene_only.data.noise_sigma = 0.0;
  scene_only.contrastive.enabled = false;
  scene_only.fusion.enabled = false;
  scene_only.lambda = {0, 0, 0, 0, 1};
  scene_only.epochs = 60;
  const auto r = train(scene_only);
  o.require(r.test.accuracy >= 0.95, fmt("scene-only zero-noise acc %.4f < 0.95", r.test.accuracy));

  const double secs = seconds_since(t0);
  o.require(secs < 15 * 60.0, fmt("runtime %.0f s >= 900 s", secs));
  o.note(fmt("mean acc full %.4f vs backbone %.4f over 10 seeds; scene-only zero-noise acc %.4f; %.0f s", m_full,
             m_base, r.test.accuracy, secs));
  return o;
}

Outcome modality_trend() {
  Outcome o;
  const auto t0 = Clock::now();
  RunConfig cfg = preset("desk");
  const data::Dataset ds = build_dataset(cfg);
  if (!full_runs.done) {
    full_runs.acc = run_seeds(cfg, ds, 10);
    full_runs.done = true;
  }
  cfg.model.modality = Modality::kAudio;
  const double m_audio = mean(run_seeds(cfg, ds, 10));
  cfg.model.modality = Modality::kVisual;
  const double m_visual = mean(run_seeds(cfg, ds, 10));
  const double m_both = mean(full_runs.acc);
  o.require(m_both >= std::max(m_audio, m_visual),
            fmt("mean acc both %.4f < max(audio %.4f, visual %.4f)", m_both, m_audio, m_visual));
  o.note(fmt("mean acc audio %.4f, visual %.4f, both %.4f over 10 seeds; %.0f s", m_audio, m_visual, m_both,
             seconds_since(t0)));
  return o;
}

Outcome determinism(const fs::path& work) {
  Outcome o;
  RunConfig cfg = preset("desk");
  cfg.epochs = 3;
  cfg.data.n = 80;
  const fs::path dir = work / "determinism";
  fs::create_directories(dir);
  const auto a = train(cfg), b = train(cfg);
  write_history_csv(a.history, cfg, dir / "a.csv");
  write_history_csv(b.history, cfg, dir / "b.csv");
  o.require(slurp(dir / "a.csv") == slurp(dir / "b.csv"), "history CSVs differ");

  RunnerOptions opt;
  opt.repeats = 2;
  RunConfig small = cfg;
  small.epochs = 1;
  write_table_csv(ablate_modality(small, opt), dir / "m1.csv");
  write_table_csv(ablate_modality(small, opt), dir / "m2.csv");
  o.require(slurp(dir / "m1.csv") == slurp(dir / "m2.csv"), "runner CSVs differ");

  save_checkpoint(a.checkpoint, dir / "ckpt.json");
  save_checkpoint(b.checkpoint, dir / "ckpt_b.json");
  o.require(slurp(dir / "ckpt.json") == slurp(dir / "ckpt_b.json"), "checkpoint files differ");
  const auto loaded = load_checkpoint(dir / "ckpt.json");
  bool bits = true;
  for (Split s : {Split::kTrain, Split::kTest, Split::kAll}) {
    const auto before = evaluate(a.checkpoint, s), after = evaluate(loaded, s);
    bits = bits && same_bits(before.accuracy, after.accuracy) && same_bits(before.logloss, after.logloss);
  }
  // Per-sample probabilities too.
  const SceneModel m1 = model_from(a.checkpoint), m2 = model_from(loaded);
  const auto ds = build_dataset(cfg);
  for (const auto& s : ds.samples) bits = bits && m1.predict(s) == m2.predict(s);
  o.require(bits, "evaluation differs after checkpoint round trip");
  o.note("history, runner CSV and checkpoint bytes identical across runs; save/load evaluation bit-exact");
  return o;
}

bool well_formed(const fs::path& csv, const Table& t, std::size_t cells, std::string& why) {
  const auto rows = read_csv(csv);
  if (rows.empty() || rows[0] != table_header(t)) {
    why = "bad header";
    return false;
  }
  if (rows.size() != 1 + cells * (t.repeats + 1)) {
    why = fmt("%zu rows, expected %zu", rows.size() - 1, cells * (t.repeats + 1));
    return false;
  }
  const std::size_t acc_col = std::find(rows[0].begin(), rows[0].end(), "acc") - rows[0].begin();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size()) {
      why = fmt("row %zu has %zu fields", r, rows[r].size());
      return false;
    }
    char* end = nullptr;
    const double acc = std::strtod(rows[r][acc_col].c_str(), &end);
    if (*end != '\0' || !(acc >= 0.0 && acc <= 1.0)) {
      why = fmt("row %zu acc field '%s'", r, rows[r][acc_col].c_str());
      return false;
    }
  }
  return fs::exists(csv.string() + ".meta.json") || (why = "missing meta", false);
}

Outcome protocols(const fs::path& work) {
  Outcome o;
  // Wide class counts so that every published K satisfies K <= min(C_e, C_o) / 2.
  RunConfig cfg = preset("desk");
  cfg.data.num_events = 64;
  cfg.data.num_objects = 64;
  cfg.data.n = 12;
  cfg.epochs = 1;
  const data::Dataset ds = build_dataset(cfg);
  RunnerOptions opt;
  opt.repeats = 1;
  opt.dataset = &ds;
  const fs::path dir = work / "protocols";
  fs::create_directories(dir);

  const std::vector<std::size_t> ks(kPaperKValues.begin(), kPaperKValues.end());
  const Table k = sweep_k(cfg, ks, {ceoa::NegativeMode::kLowestK, ceoa::NegativeMode::kRandomK}, opt);
  write_table_csv(k, dir / "sweep_k.csv");
  std::size_t k_ok = 0;
  for (const auto& c : k.cells) k_ok += c.runs.size() == 1 && c.runs[0].ok();
  o.require(k.cells.size() == 14 && k_ok == 14, fmt("sweep-k: %zu cells, %zu ok", k.cells.size(), k_ok));
  std::string why;
  o.require(well_formed(dir / "sweep_k.csv", k, 14, why), "sweep_k.csv " + why);

  const Table l = sweep_lambda(cfg, paper_lambda_combos(), opt);
  write_table_csv(l, dir / "sweep_lambda.csv");
  std::size_t l_ok = 0;
  for (const auto& c : l.cells) l_ok += c.runs.size() == 1 && c.runs[0].ok();
  o.require(l.cells.size() == 12 && l_ok == 12, fmt("sweep-lambda: %zu cells, %zu ok", l.cells.size(), l_ok));
  o.require(well_formed(dir / "sweep_lambda.csv", l, 12, why), "sweep_lambda.csv " + why);
  o.note(fmt("sweep-k %zu/14 cells (C_e = C_o = 64), sweep-lambda %zu/12 combos, CSVs parse", k_ok, l_ok));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "avsc_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  const auto t0 = Clock::now();

  guarded(1, "gradient correctness", gradients);
  guarded(2, "closed-form loss identities", identities);
  guarded(3, "oracle equivalence", oracles);
  guarded(4, "attention row sums", attention_rows);
  guarded(7, "determinism and persistence", [&] { return determinism(work); });
  guarded(8, "protocol completeness", [&] { return protocols(work); });
  guarded(5, "ablation trend", ablation_trend);
  guarded(6, "modality trend", modality_trend);

  std::printf("%d criteria failed, %.0f s total\n", failures, seconds_since(t0));
  return failures ? 1 : 0;
}
