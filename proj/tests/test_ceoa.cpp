#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "avsc/ceoa.hpp"
#include "avsc/errors.hpp"
#include "avsc/gradcheck.hpp"
#include "avsc/ops.hpp"
#include "oracles.hpp"

using namespace avsc;
using num::Tensor;

namespace {

std::vector<double> uniform(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

branches::ClassifierHead head_of(std::size_t c, std::size_t d, std::mt19937_64& rng) {
  return {Tensor({c, d}, uniform(c * d, rng), true), Tensor::zeros({c, 1}, true)};
}

}  // namespace

TEST_SUITE("ceoa") {

TEST_CASE("selection examples") {
  const std::vector<double> p{0.9, 0.1, 0.8, 0.2};
  const auto s = ceoa::select_indices(p, 1, ceoa::NegativeMode::kLowestK, nullptr);
  CHECK(s.positive == std::vector<std::size_t>{0});
  CHECK(s.negative == std::vector<std::size_t>{1});

  const std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
  const auto t = ceoa::select_indices(flat, 2, ceoa::NegativeMode::kLowestK, nullptr);
  CHECK(sorted(t.positive) == std::vector<std::size_t>{0, 1});
  CHECK(sorted(t.negative) == std::vector<std::size_t>{2, 3});
}

TEST_CASE("selection matches a full-sort oracle on 1000 vectors") {
  std::mt19937_64 rng(42), rkm(7);
  std::uniform_int_distribution<std::size_t> size_dist(6, 40);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = size_dist(rng);
    const std::size_t k = 1 + rng() % (n / 2);
    const auto p = uniform(n, rng, 0.0, 1.0);
    const auto top = oracle::top_k(p, k, true);

    const auto l = ceoa::select_indices(p, k, ceoa::NegativeMode::kLowestK, nullptr);
    CHECK(sorted(l.positive) == top);
    CHECK(sorted(l.negative) == oracle::top_k(p, k, false));

    const auto r = ceoa::select_indices(p, k, ceoa::NegativeMode::kRandomK, &rkm);
    CHECK(sorted(r.positive) == top);
    CHECK(r.negative.size() == k);
    const std::set<std::size_t> neg(r.negative.begin(), r.negative.end());
    CHECK(neg.size() == k);
    for (std::size_t i : top) CHECK(neg.count(i) == 0);
    for (std::size_t i : neg) CHECK(i < n);
  }
}

TEST_CASE("random-K draws are reproducible and cover the complement") {
  std::mt19937_64 data(3);
  const auto p = uniform(10, data, 0.0, 1.0);
  std::mt19937_64 a(99), b(99);
  for (int i = 0; i < 20; ++i)
    CHECK(ceoa::select_indices(p, 3, ceoa::NegativeMode::kRandomK, &a).negative ==
          ceoa::select_indices(p, 3, ceoa::NegativeMode::kRandomK, &b).negative);

  std::set<std::size_t> seen;
  std::mt19937_64 c(5);
  for (int i = 0; i < 200; ++i)
    for (std::size_t idx : ceoa::select_indices(p, 3, ceoa::NegativeMode::kRandomK, &c).negative)
      seen.insert(idx);
  CHECK(seen.size() == 7);
  CHECK_THROWS_AS(ceoa::select_indices(p, 3, ceoa::NegativeMode::kRandomK, nullptr), ContractError);
}

TEST_CASE("K must lie in [1, min(C_e, C_o) / 2]") {
  ceoa::ContrastiveConfig cfg;
  cfg.k = 0;
  CHECK_THROWS_AS(cfg.validate(10, 12), ConfigError);
  cfg.k = 5;
  CHECK_NOTHROW(cfg.validate(10, 12));
  cfg.k = 6;
  CHECK_THROWS_AS(cfg.validate(10, 12), ConfigError);
  CHECK(ceoa::parse_mode("RKM") == ceoa::NegativeMode::kRandomK);
  CHECK_THROWS_AS(ceoa::parse_mode("top"), ConfigError);
}

TEST_CASE("zero-gap banks give ln 2") {
  std::mt19937_64 rng(1);
  const Tensor pe({3, 4}, uniform(12, rng)), po({3, 4}, uniform(12, rng));
  CHECK(std::abs(ceoa::pairwise_contrastive(pe, po, po).item() - std::log(2.0)) <= 1e-12);

  ceoa::ContrastiveBank bank;
  bank.pos_events = pe;
  bank.neg_events = pe;  // N_e == P_e
  bank.pos_objects = po;
  bank.neg_objects = po;
  CHECK(std::abs(ceoa::contrastive_loss_e2o(bank).item() - std::log(2.0)) <= 1e-12);
  CHECK(std::abs(ceoa::contrastive_loss_o2e(bank).item() - std::log(2.0)) <= 1e-12);

  const Tensor zeros = Tensor::zeros({2, 3});
  CHECK(std::abs(ceoa::pairwise_contrastive(zeros, zeros, zeros).item() - std::log(2.0)) <= 1e-12);
}

TEST_CASE("saturated gap drives the loss to zero") {
  // Anchor [1 0], positive [40 0], negative [0 0]: every gap entry is +40.
  const Tensor a({2, 2}, {1, 0, 1, 0}), p({2, 2}, {40, 0, 40, 0}), n = Tensor::zeros({2, 2});
  const double l = ceoa::pairwise_contrastive(a, p, n).item();
  CHECK(l >= 0.0);
  CHECK(l <= 1e-12);
  // And a hugely negative gap stays finite.
  CHECK(std::isfinite(ceoa::pairwise_contrastive(a, n, p).item()));
}

TEST_CASE("loss matches both algebraic forms") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = 1 + rng() % 4, d = 1 + rng() % 5;
    const auto a = uniform(k * d, rng), p = uniform(k * d, rng), n = uniform(k * d, rng);
    const double got = ceoa::pairwise_contrastive(Tensor({k, d}, a), Tensor({k, d}, p), Tensor({k, d}, n)).item();
    const double s = oracle::contrastive(a, p, n, k, d, false), q = oracle::contrastive(a, p, n, k, d, true);
    CHECK(std::abs(s - q) <= 1e-12);
    CHECK(std::abs(got - s) <= 1e-12);
    CHECK(got > 0.0);
  }
}

TEST_CASE("loss strictly decreases when every gap entry increases") {
  std::mt19937_64 rng(9);
  const auto a = uniform(6, rng), p = uniform(6, rng), n = uniform(6, rng);
  const Tensor ta({2, 3}, a), tn({2, 3}, n);
  double prev = ceoa::pairwise_contrastive(ta, Tensor({2, 3}, p), tn).item();
  // Moving the positives along the anchors raises every entry of A P^T.
  std::vector<double> shifted = p;
  for (int step = 0; step < 5; ++step) {
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t c = 0; c < 3; ++c) shifted[j * 3 + c] += 0.1 * (a[c] + a[3 + c]);
    const double cur = ceoa::pairwise_contrastive(ta, Tensor({2, 3}, shifted), tn).item();
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("bank rows are live views into the heads") {
  std::mt19937_64 rng(10);
  const auto eh = head_of(8, 4, rng), oh = head_of(6, 4, rng);
  const auto pe = uniform(8, rng, 0, 1), po = uniform(6, rng, 0, 1);
  ceoa::ContrastiveConfig cfg;
  cfg.k = 2;
  const auto bank = ceoa::select_bank(pe, po, eh, oh, cfg);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(bank.pos_events.at(r, c) == eh.weight.at(bank.events.positive[r], c));
      CHECK(bank.neg_objects.at(r, c) == oh.weight.at(bank.objects.negative[r], c));
    }

  num::backward(ceoa::contrastive_loss_e2o(bank));
  // Only P_e rows of the event head and P_o / N_o rows of the object head see gradient.
  for (std::size_t r = 0; r < 8; ++r) {
    const bool pos = std::count(bank.events.positive.begin(), bank.events.positive.end(), r);
    double mag = 0.0;
    for (std::size_t c = 0; c < 4; ++c) mag += std::abs(eh.weight.grad()[r * 4 + c]);
    if (pos) CHECK(mag > 0.0);
    else CHECK(mag == 0.0);
  }
  for (std::size_t r = 0; r < 6; ++r) {
    const bool sel = std::count(bank.objects.positive.begin(), bank.objects.positive.end(), r) ||
                     std::count(bank.objects.negative.begin(), bank.objects.negative.end(), r);
    double mag = 0.0;
    for (std::size_t c = 0; c < 4; ++c) mag += std::abs(oh.weight.grad()[r * 4 + c]);
    if (sel) CHECK(mag > 0.0);
    else CHECK(mag == 0.0);
  }

  cfg.k = 4;
  CHECK_THROWS_AS(ceoa::select_bank(pe, po, eh, oh, cfg), ConfigError);
}

TEST_CASE("contrastive gradients match finite differences and N_e gets none") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    Tensor pe({3, 4}, uniform(12, rng), true), ne({3, 4}, uniform(12, rng), true);
    Tensor po({3, 4}, uniform(12, rng), true), no({3, 4}, uniform(12, rng), true);
    ceoa::ContrastiveBank bank{pe, ne, po, no, {}, {}, 3, ceoa::NegativeMode::kLowestK};
    const auto r = num::grad_check([&] { return ceoa::contrastive_loss_e2o(bank); }, {pe, po, no});
    CHECK(r.max_rel_error <= 1e-4);
    ne.zero_grad();
    num::backward(ceoa::contrastive_loss_e2o(bank));
    for (double g : ne.grad()) CHECK(g == 0.0);

    const auto r2 = num::grad_check([&] { return ceoa::contrastive_loss_o2e(bank); }, {po, pe, ne});
    CHECK(r2.max_rel_error <= 1e-4);
  }
}

TEST_CASE("a small gradient step does not increase the loss") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(100 + seed);
    Tensor pe({2, 3}, uniform(6, rng), true), po({2, 3}, uniform(6, rng), true), no({2, 3}, uniform(6, rng), true);
    const Tensor loss = ceoa::pairwise_contrastive(pe, po, no);
    const double before = loss.item();
    num::backward(loss);
    const double lr = 1e-3;
    for (Tensor* t : {&pe, &po, &no}) {
      auto d = t->mutable_data();
      const auto g = t->grad();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= lr * g[i];
    }
    CHECK(ceoa::pairwise_contrastive(pe, po, no).item() <= before);
  }
}

}  // TEST_SUITE
