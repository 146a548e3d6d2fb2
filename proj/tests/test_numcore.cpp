#include <doctest.h>

#include <cmath>
#include <random>

#include "avsc/branches.hpp"
#include "avsc/diagnostics.hpp"
#include "avsc/errors.hpp"
#include "avsc/gradcheck.hpp"
#include "avsc/ops.hpp"

using namespace avsc;
using num::Tensor;

namespace {

Tensor rand_tensor(num::Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                   bool grad = true) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(num::numel_of(shape));
  for (double& x : v) x = u(rng);
  return Tensor(std::move(shape), std::move(v), grad);
}

}  // namespace

TEST_SUITE("numcore") {

TEST_CASE("tensor construction validates shape and data") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(Tensor({0, 2}, {}), ShapeError);
  CHECK_THROWS_AS(Tensor({}, {}), ShapeError);
  const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.at(1, 2) == 6);
  CHECK(t.is_leaf());
}

TEST_CASE("matmul") {
  SUBCASE("identity") {
    const Tensor m({2, 2}, {1.5, -2, 3, 0.25});
    CHECK(num::matmul(Tensor({2, 2}, {1, 0, 0, 1}), m).to_vector() == m.to_vector());
  }
  SUBCASE("1x1") { CHECK(num::matmul(Tensor({1, 1}, {2}), Tensor({1, 1}, {3})).item() == 6.0); }
  SUBCASE("naive oracle up to 16x16") {
    std::mt19937_64 rng(1);
    for (auto [m, k, n] : std::vector<std::array<std::size_t, 3>>{{3, 4, 2}, {16, 16, 16}, {1, 7, 9}, {11, 5, 16}}) {
      const Tensor a = rand_tensor({m, k}, rng), b = rand_tensor({k, n}, rng);
      const Tensor c = num::matmul(a, b);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          double s = 0.0;
          for (std::size_t p = 0; p < k; ++p) s += a.at(i, p) * b.at(p, j);
          CHECK(std::abs(c.at(i, j) - s) <= 1e-12);
        }
    }
  }
  SUBCASE("shape mismatch names both shapes") {
    try {
      num::matmul(Tensor::zeros({2, 3}), Tensor::zeros({4, 2}));
      FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("[2x3]") != std::string::npos);
      CHECK(msg.find("[4x2]") != std::string::npos);
    }
  }
}

TEST_CASE("sigmoid") {
  CHECK(num::sigmoid(Tensor::scalar(0.0)).item() == 0.5);
  CHECK(std::abs(num::sigmoid(Tensor::scalar(50.0)).item() - 1.0) <= 1e-15);
  const auto big = num::sigmoid(Tensor({2}, {700.0, -700.0})).to_vector();
  CHECK(big[0] == 1.0);
  CHECK(big[1] >= 0.0);
  CHECK(std::isfinite(big[1]));
  Tensor x = Tensor::scalar(0.3, true);
  const auto r = num::grad_check([&] { return num::sigmoid(x); }, {x}, 1e-6, 1e-6);
  CHECK(r.passed);
}

TEST_CASE("softmax_rows") {
  const auto u = num::softmax_rows(Tensor({1, 4}, {2, 2, 2, 2})).to_vector();
  for (double p : u) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));
  const auto q = num::softmax_rows(Tensor({1, 2}, {0.0, std::log(3.0)})).to_vector();
  CHECK(std::abs(q[0] - 0.25) <= 1e-15);
  CHECK(std::abs(q[1] - 0.75) <= 1e-15);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor x = rand_tensor({4, 5}, rng, -50.0, 50.0);
    const Tensor y = num::softmax_rows(x);
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < 5; ++c) s += y.at(r, c);
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("elementwise suite") {
  const auto r = num::relu(Tensor({2}, {-2.0, 3.0})).to_vector();
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 3.0);
  CHECK(num::mean(Tensor({4}, {1, 2, 3, 4})).item() == 2.5);
  CHECK_THROWS_AS(num::log(Tensor({2}, {1.0, 0.0})), DomainError);
  CHECK_THROWS_AS(num::log(Tensor({1}, {-1.0})), DomainError);
  CHECK_THROWS_AS(num::concat({Tensor::zeros({2, 3}), Tensor::zeros({2, 4})}, 0), ShapeError);
  CHECK_THROWS_AS(num::add(Tensor::zeros({2, 3}), Tensor::zeros({3, 2})), ShapeError);
  CHECK(num::transpose(Tensor({2, 3}, {1, 2, 3, 4, 5, 6})).to_vector() == std::vector<double>{1, 4, 2, 5, 3, 6});
  CHECK(num::concat({Tensor({1, 2}, {1, 2}), Tensor({1, 2}, {3, 4})}, 0).to_vector() ==
        std::vector<double>{1, 2, 3, 4});
  CHECK(num::concat({Tensor({2, 1}, {1, 2}), Tensor({2, 1}, {3, 4})}, 1).to_vector() ==
        std::vector<double>{1, 3, 2, 4});
}

TEST_CASE("row_select routes gradient only into selected rows") {
  Tensor w({3, 2}, {1, 2, 3, 4, 5, 6}, true);
  num::backward(num::sum(num::row_select(w, {1})));
  CHECK(std::vector<double>(w.grad().begin(), w.grad().end()) == std::vector<double>{0, 0, 1, 1, 0, 0});
}

TEST_CASE("patchify and depthwise conv against direct loops") {
  std::mt19937_64 rng(3);
  const std::size_t H = 4, W = 6, C = 2, ph = 2, pw = 3;
  const Tensor x = rand_tensor({H * W, C}, rng);
  const Tensor p = num::patchify(x, H, W, ph, pw);
  REQUIRE(p.shape() == num::Shape{(H / ph) * (W / pw), ph * pw * C});
  for (std::size_t py = 0; py < H / ph; ++py)
    for (std::size_t px = 0; px < W / pw; ++px)
      for (std::size_t dy = 0; dy < ph; ++dy)
        for (std::size_t dx = 0; dx < pw; ++dx)
          for (std::size_t c = 0; c < C; ++c)
            CHECK(p.at(py * (W / pw) + px, (dy * pw + dx) * C + c) ==
                  x.at((py * ph + dy) * W + px * pw + dx, c));
  CHECK_THROWS_AS(num::patchify(x, H, W, 3, 3), ShapeError);

  const std::size_t k = 3;
  const Tensor ker = rand_tensor({k * k, C}, rng);
  const Tensor y = num::depthwise_conv2d(x, ker, H, W, k);
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c0 = 0; c0 < W; ++c0)
      for (std::size_t c = 0; c < C; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i)
          for (std::size_t j = 0; j < k; ++j) {
            const long rr = static_cast<long>(r + i) - 1, cc = static_cast<long>(c0 + j) - 1;
            if (rr < 0 || cc < 0 || rr >= static_cast<long>(H) || cc >= static_cast<long>(W)) continue;
            s += x.at(static_cast<std::size_t>(rr) * W + static_cast<std::size_t>(cc), c) * ker.at(i * k + j, c);
          }
        CHECK(std::abs(y.at(r * W + c0, c) - s) <= 1e-14);
      }
}

TEST_CASE("backward contract") {
  SUBCASE("sum gives ones") {
    Tensor x({3}, {1, 2, 3}, true);
    num::backward(num::sum(x));
    CHECK(std::vector<double>(x.grad().begin(), x.grad().end()) == std::vector<double>{1, 1, 1});
  }
  SUBCASE("non-scalar loss is rejected") {
    Tensor x({3}, {1, 2, 3}, true);
    CHECK_THROWS_AS(num::backward(num::scale(x, 2.0)), ContractError);
  }
  SUBCASE("second backward on the same loss is rejected") {
    Tensor x({3}, {1, 2, 3}, true);
    const Tensor loss = num::sum(num::mul(x, x));
    num::backward(loss);
    CHECK_THROWS_AS(num::backward(loss), ContractError);
  }
  SUBCASE("disconnected parameter keeps zero gradient") {
    Tensor x({2}, {1, 2}, true), unused({2}, {3, 4}, true);
    num::backward(num::sum(x));
    CHECK(std::vector<double>(unused.grad().begin(), unused.grad().end()) == std::vector<double>{0, 0});
  }
  SUBCASE("leaf gradients accumulate across graphs until zero_grad") {
    Tensor x({2}, {1, 2}, true);
    num::backward(num::sum(x));
    num::backward(num::scale(num::sum(x), 2.0));
    CHECK(std::vector<double>(x.grad().begin(), x.grad().end()) == std::vector<double>{3, 3});
    x.zero_grad();
    CHECK(std::vector<double>(x.grad().begin(), x.grad().end()) == std::vector<double>{0, 0});
  }
  SUBCASE("shared subexpression is visited once") {
    Tensor x({1}, {3}, true);
    const Tensor y = num::mul(x, x);
    const Tensor loss = num::sum(num::add(y, y));  // 2 x^2
    const auto tape = num::Tape::record(loss);
    CHECK(tape.size() == 4);  // x, y, add, sum
    num::backward(loss);
    CHECK(x.grad()[0] == 12.0);
  }
}

TEST_CASE("forward is bit-identical across runs") {
  std::mt19937_64 r1(4), r2(4);
  const Tensor a1 = rand_tensor({7, 9}, r1), b1 = rand_tensor({9, 5}, r1);
  const Tensor a2 = rand_tensor({7, 9}, r2), b2 = rand_tensor({9, 5}, r2);
  CHECK(num::softmax_rows(num::matmul(a1, b1)).to_vector() == num::softmax_rows(num::matmul(a2, b2)).to_vector());
}

TEST_CASE("grad_check examples") {
  std::mt19937_64 rng(5);
  SUBCASE("sigmoid BCE passes") {
    Tensor w = rand_tensor({1, 3}, rng);
    const Tensor x = rand_tensor({3, 1}, rng, -1, 1, false);
    auto f = [&] { return branches::bce_loss(num::sigmoid(num::matmul(w, x)), Tensor({1, 1}, {1.0})); };
    CHECK(num::grad_check(f, {w}, 1e-5, 1e-4).passed);
  }
  SUBCASE("constant function passes") {
    Tensor w = rand_tensor({2, 2}, rng);
    auto f = [&] { return num::add_scalar(num::scale(num::sum(w), 0.0), 4.0); };
    const auto r = num::grad_check(f, {w});
    CHECK(r.passed);
    CHECK(r.max_rel_error == 0.0);
  }
  SUBCASE("corrupted backward rule fails") {
    Tensor w = rand_tensor({2, 3}, rng);
    // Square with a deliberately wrong derivative (x instead of 2x).
    auto bad_square = [](const Tensor& x) {
      std::vector<double> v(x.data().begin(), x.data().end());
      for (double& e : v) e *= e;
      return num::make_result(x.shape(), std::move(v), "bad_square", {x}, [x](num::Node& self) {
        auto g = x.node()->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * x.data()[i];
      });
    };
    CHECK_FALSE(num::grad_check([&] { return num::sum(bad_square(w)); }, {w}).passed);
  }
  SUBCASE("two-layer net with BCE") {
    Tensor w1 = rand_tensor({4, 5}, rng), w2 = rand_tensor({5, 3}, rng);
    const Tensor x = rand_tensor({2, 4}, rng, -1, 1, false);
    const Tensor y({3, 1}, {1, 0, 1});
    auto f = [&] {
      const Tensor h = num::gelu(num::matmul(x, w1));
      const Tensor logits = num::transpose(num::mean_rows(num::matmul(h, w2)));
      return branches::bce_loss(num::sigmoid(logits), y);
    };
    CHECK(num::grad_check(f, {w1, w2}).passed);
  }
}

TEST_CASE("every differentiable op passes the finite-difference check on 10 seeds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    for (const auto& c : harness::check_ops(seed)) {
      CAPTURE(seed);
      CAPTURE(c.name);
      CHECK(c.report.max_rel_error <= 1e-4);
    }
}

}  // TEST_SUITE
