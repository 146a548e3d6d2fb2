#include "avsc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "avsc/errors.hpp"
#include "avsc/kernels.hpp"

namespace avsc::num {
namespace {

[[noreturn]] void shape_mismatch(std::string_view op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                   to_string(b.shape()));
}

void require_2d(std::string_view op, const Tensor& x) {
  if (x.ndim() != 2)
    throw ShapeError(std::string(op) + ": expected 2-D tensor, got " + to_string(x.shape()));
}

void require_same(std::string_view op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_mismatch(op, a, b);
}

// Grad buffer of a parent, or an empty span when it takes no gradient.
std::span<double> pgrad(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  if (!p.requires_grad) return {};
  return p.ensure_grad();
}

const std::vector<double>& pdata(const Node& self, std::size_t i) { return self.parents[i]->data; }

template <class F>
Tensor unary(std::string_view op, const Tensor& x, F&& f, std::function<void(Node&)> bw) {
  std::vector<double> out(x.numel());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(x.shape(), std::move(out), op, {x}, std::move(bw));
}

double stable_sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d("matmul", a);
  require_2d("matmul", b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) shape_mismatch("matmul", a, b);
  std::vector<double> out(m * n);
  kernels::active().gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, n);
  return make_result({m, n}, std::move(out), "matmul", {a, b}, [m, k, n](Node& self) {
    const auto& kt = kernels::active();
    const double* g = self.grad.data();
    if (auto ga = pgrad(self, 0); !ga.empty()) {
      std::vector<double> tmp(m * k);
      kt.gemm_nt(g, pdata(self, 1).data(), tmp.data(), m, n, k);  // g * b^T
      kt.add(ga.data(), tmp.data(), ga.data(), m * k);
    }
    if (auto gb = pgrad(self, 1); !gb.empty()) {
      std::vector<double> tmp(k * n);
      kt.gemm_tn(pdata(self, 0).data(), g, tmp.data(), m, k, n);  // a^T * g
      kt.add(gb.data(), tmp.data(), gb.data(), k * n);
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same("add", a, b);
  std::vector<double> out(a.numel());
  kernels::active().add(a.data().data(), b.data().data(), out.data(), out.size());
  return make_result(a.shape(), std::move(out), "add", {a, b}, [](Node& self) {
    const auto& kt = kernels::active();
    for (std::size_t i = 0; i < 2; ++i)
      if (auto g = pgrad(self, i); !g.empty())
        kt.add(g.data(), self.grad.data(), g.data(), g.size());
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same("sub", a, b);
  std::vector<double> out(a.numel());
  const auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return make_result(a.shape(), std::move(out), "sub", {a, b}, [](Node& self) {
    if (auto g = pgrad(self, 0); !g.empty())
      kernels::active().add(g.data(), self.grad.data(), g.data(), g.size());
    if (auto g = pgrad(self, 1); !g.empty())
      kernels::active().axpy(-1.0, self.grad.data(), g.data(), g.size());
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same("mul", a, b);
  std::vector<double> out(a.numel());
  kernels::active().mul(a.data().data(), b.data().data(), out.data(), out.size());
  return make_result(a.shape(), std::move(out), "mul", {a, b}, [](Node& self) {
    const auto& kt = kernels::active();
    if (auto g = pgrad(self, 0); !g.empty())
      kt.mul_acc(self.grad.data(), pdata(self, 1).data(), g.data(), g.size());
    if (auto g = pgrad(self, 1); !g.empty())
      kt.mul_acc(self.grad.data(), pdata(self, 0).data(), g.data(), g.size());
  });
}

Tensor add_row(const Tensor& x, const Tensor& row) {
  require_2d("add_row", x);
  require_2d("add_row", row);
  const std::size_t m = x.rows(), n = x.cols();
  if (row.rows() != 1 || row.cols() != n) shape_mismatch("add_row", x, row);
  std::vector<double> out(m * n);
  const auto& kt = kernels::active();
  for (std::size_t i = 0; i < m; ++i)
    kt.add(x.data().data() + i * n, row.data().data(), out.data() + i * n, n);
  return make_result({m, n}, std::move(out), "add_row", {x, row}, [m, n](Node& self) {
    const auto& kt = kernels::active();
    if (auto g = pgrad(self, 0); !g.empty()) kt.add(g.data(), self.grad.data(), g.data(), m * n);
    if (auto g = pgrad(self, 1); !g.empty())
      for (std::size_t i = 0; i < m; ++i) kt.add(g.data(), self.grad.data() + i * n, g.data(), n);
  });
}

Tensor scale(const Tensor& x, double s) {
  return unary("scale", x, [s](double v) { return s * v; }, [s](Node& self) {
    if (auto g = pgrad(self, 0); !g.empty()) kernels::active().axpy(s, self.grad.data(), g.data(), g.size());
  });
}

Tensor add_scalar(const Tensor& x, double s) {
  return unary("add_scalar", x, [s](double v) { return v + s; }, [](Node& self) {
    if (auto g = pgrad(self, 0); !g.empty())
      kernels::active().add(g.data(), self.grad.data(), g.data(), g.size());
  });
}

Tensor relu(const Tensor& x) {
  return unary("relu", x, [](double v) { return v > 0.0 ? v : 0.0; }, [](Node& self) {
    auto g = pgrad(self, 0);
    if (g.empty()) return;
    const auto& in = pdata(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (in[i] > 0.0) g[i] += self.grad[i];
  });
}

Tensor gelu(const Tensor& x) {
  auto f = [](double v) {
    return 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
  };
  return unary("gelu", x, f, [](Node& self) {
    auto g = pgrad(self, 0);
    if (g.empty()) return;
    const auto& in = pdata(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = in[i];
      const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
      const double dt = (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
      g[i] += self.grad[i] * (0.5 * (1.0 + t) + 0.5 * v * dt);
    }
  });
}

Tensor sigmoid(const Tensor& x) {
  return unary("sigmoid", x, stable_sigmoid, [](Node& self) {
    auto g = pgrad(self, 0);
    if (g.empty()) return;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = self.data[i];
      g[i] += self.grad[i] * s * (1.0 - s);
    }
  });
}

Tensor log(const Tensor& x) {
  for (double v : x.data())
    if (!(v > 0.0)) throw DomainError("log: non-positive input " + std::to_string(v));
  return unary("log", x, [](double v) { return std::log(v); }, [](Node& self) {
    auto g = pgrad(self, 0);
    if (g.empty()) return;
    const auto& in = pdata(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] / in[i];
  });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (lo > hi) throw DomainError("clamp: lo > hi");
  return unary("clamp", x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
               [lo, hi](Node& self) {
                 auto g = pgrad(self, 0);
                 if (g.empty()) return;
                 const auto& in = pdata(self, 0);
                 for (std::size_t i = 0; i < g.size(); ++i)
                   if (in[i] >= lo && in[i] <= hi) g[i] += self.grad[i];
               });
}

Tensor softmax_rows(const Tensor& x) {
  require_2d("softmax_rows", x);
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  const auto in = x.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = in.data() + i * n;
    double* o = out.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (o[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < n; ++j) o[j] /= z;
  }
  return make_result({m, n}, std::move(out), "softmax_rows", {x}, [m, n](Node& self) {
    auto g = pgrad(self, 0);
    if (g.empty()) return;
    const auto& kt = kernels::active();
    for (std::size_t i = 0; i < m; ++i) {
      const double* s = self.data.data() + i * n;
      const double* go = self.grad.data() + i * n;
      const double inner = kt.dot(go, s, n);
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += s[j] * (go[j] - inner);
    }
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return make_result({1}, {s}, "sum", {x}, [](Node& self) {
    auto g = pgrad(self, 0);
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  const double inv = 1.0 / static_cast<double>(x.numel());
  return make_result({1}, {s * inv}, "mean", {x}, [inv](Node& self) {
    auto g = pgrad(self, 0);
    for (auto& v : g) v += self.grad[0] * inv;
  });
}

Tensor mean_rows(const Tensor& x) {
  require_2d("mean_rows", x);
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(n, 0.0);
  const auto& kt = kernels::active();
  for (std::size_t i = 0; i < m; ++i) kt.add(out.data(), x.data().data() + i * n, out.data(), n);
  const double inv = 1.0 / static_cast<double>(m);
  for (auto& v : out) v *= inv;
  return make_result({1, n}, std::move(out), "mean_rows", {x}, [m, n, inv](Node& self) {
    auto g = pgrad(self, 0);
    if (g.empty()) return;
    const auto& kt = kernels::active();
    for (std::size_t i = 0; i < m; ++i) kt.axpy(inv, self.grad.data(), g.data() + i * n, n);
  });
}

Tensor l2_normalize_rows(const Tensor& x) {
  require_2d("l2_normalize_rows", x);
  const std::size_t m = x.rows(), n = x.cols();
  const auto& kt = kernels::active();
  std::vector<double> out(m * n), norms(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.data().data() + i * n;
    norms[i] = std::sqrt(kt.dot(row, row, n) + 1e-12);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = row[j] / norms[i];
  }
  return make_result({m, n}, std::move(out), "l2_normalize_rows", {x},
                     [m, n, norms = std::move(norms)](Node& self) {
                       auto g = pgrad(self, 0);
                       if (g.empty()) return;
                       const auto& kt = kernels::active();
                       for (std::size_t i = 0; i < m; ++i) {
                         const double* y = self.data.data() + i * n;
                         const double* go = self.grad.data() + i * n;
                         const double proj = kt.dot(y, go, n);
                         for (std::size_t j = 0; j < n; ++j)
                           g[i * n + j] += (go[j] - y[j] * proj) / norms[i];
                       }
                     });
}

Tensor transpose(const Tensor& x) {
  require_2d("transpose", x);
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  const auto in = x.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = in[i * n + j];
  return make_result({n, m}, std::move(out), "transpose", {x}, [m, n](Node& self) {
    auto g = pgrad(self, 0);
    if (g.empty()) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis > 1) throw ShapeError("concat: axis must be 0 or 1");
  for (const auto& p : parts) require_2d("concat", p);
  const std::size_t fixed = axis == 0 ? parts[0].cols() : parts[0].rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if ((axis == 0 ? p.cols() : p.rows()) != fixed) shape_mismatch("concat", parts[0], p);
    total += axis == 0 ? p.rows() : p.cols();
  }
  const Shape shape = axis == 0 ? Shape{total, fixed} : Shape{fixed, total};
  std::vector<double> out(total * fixed);
  std::vector<std::size_t> widths;
  if (axis == 0) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      std::copy(p.data().begin(), p.data().end(), out.begin() + static_cast<std::ptrdiff_t>(off));
      off += p.numel();
    }
  } else {
    std::size_t col = 0;
    for (const auto& p : parts) {
      const std::size_t w = p.cols();
      for (std::size_t r = 0; r < fixed; ++r)
        std::copy_n(p.data().data() + r * w, w, out.data() + r * total + col);
      col += w;
    }
  }
  for (const auto& p : parts) widths.push_back(axis == 0 ? p.numel() : p.cols());
  return make_result(shape, std::move(out), "concat", parts,
                     [axis, fixed, total, widths](Node& self) {
                       std::size_t off = 0;
                       for (std::size_t i = 0; i < widths.size(); ++i) {
                         auto g = pgrad(self, i);
                         if (!g.empty()) {
                           if (axis == 0) {
                             for (std::size_t j = 0; j < widths[i]; ++j) g[j] += self.grad[off + j];
                           } else {
                             for (std::size_t r = 0; r < fixed; ++r)
                               for (std::size_t c = 0; c < widths[i]; ++c)
                                 g[r * widths[i] + c] += self.grad[r * total + off + c];
                           }
                         }
                         off += widths[i];
                       }
                     });
}

Tensor row_select(const Tensor& x, const std::vector<std::size_t>& indices) {
  require_2d("row_select", x);
  if (indices.empty()) throw ShapeError("row_select: empty index list");
  const std::size_t m = x.rows(), n = x.cols();
  for (auto i : indices)
    if (i >= m)
      throw ShapeError("row_select: index " + std::to_string(i) + " out of range for " +
                       to_string(x.shape()));
  std::vector<double> out(indices.size() * n);
  for (std::size_t r = 0; r < indices.size(); ++r)
    std::copy_n(x.data().data() + indices[r] * n, n, out.data() + r * n);
  return make_result({indices.size(), n}, std::move(out), "row_select", {x},
                     [indices, n](Node& self) {
                       auto g = pgrad(self, 0);
                       if (g.empty()) return;
                       const auto& kt = kernels::active();
                       for (std::size_t r = 0; r < indices.size(); ++r)
                         kt.add(g.data() + indices[r] * n, self.grad.data() + r * n,
                                g.data() + indices[r] * n, n);
                     });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel_of(shape) != x.numel())
    throw ShapeError("reshape: " + to_string(x.shape()) + " -> " + to_string(shape));
  return make_result(std::move(shape), x.to_vector(), "reshape", {x}, [](Node& self) {
    if (auto g = pgrad(self, 0); !g.empty())
      kernels::active().add(g.data(), self.grad.data(), g.data(), g.size());
  });
}

Tensor patchify(const Tensor& x, std::size_t height, std::size_t width, std::size_t patch_h,
                std::size_t patch_w) {
  require_2d("patchify", x);
  if (x.rows() != height * width)
    throw ShapeError("patchify: " + to_string(x.shape()) + " is not a " + std::to_string(height) +
                     "x" + std::to_string(width) + " image");
  if (patch_h == 0 || patch_w == 0 || height % patch_h || width % patch_w)
    throw ShapeError("patchify: " + std::to_string(height) + "x" + std::to_string(width) +
                     " grid not divisible by " + std::to_string(patch_h) + "x" +
                     std::to_string(patch_w) + " patches");
  const std::size_t ch = x.cols();
  const std::size_t ph = height / patch_h, pw = width / patch_w;
  const std::size_t pdim = patch_h * patch_w * ch;
  // map[out_index] = in_index; a pure permutation.
  std::vector<std::size_t> map(height * width * ch);
  for (std::size_t py = 0; py < ph; ++py)
    for (std::size_t px = 0; px < pw; ++px)
      for (std::size_t dy = 0; dy < patch_h; ++dy)
        for (std::size_t dx = 0; dx < patch_w; ++dx)
          for (std::size_t c = 0; c < ch; ++c) {
            const std::size_t out_i = (py * pw + px) * pdim + (dy * patch_w + dx) * ch + c;
            const std::size_t in_i = ((py * patch_h + dy) * width + (px * patch_w + dx)) * ch + c;
            map[out_i] = in_i;
          }
  std::vector<double> out(map.size());
  const auto in = x.data();
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = in[map[i]];
  return make_result({ph * pw, pdim}, std::move(out), "patchify", {x},
                     [map = std::move(map)](Node& self) {
                       auto g = pgrad(self, 0);
                       if (g.empty()) return;
                       for (std::size_t i = 0; i < map.size(); ++i) g[map[i]] += self.grad[i];
                     });
}

Tensor depthwise_conv2d(const Tensor& x, const Tensor& kernel, std::size_t height,
                        std::size_t width, std::size_t k) {
  require_2d("depthwise_conv2d", x);
  require_2d("depthwise_conv2d", kernel);
  if (x.rows() != height * width)
    throw ShapeError("depthwise_conv2d: " + to_string(x.shape()) + " is not a " +
                     std::to_string(height) + "x" + std::to_string(width) + " image");
  const std::size_t ch = x.cols();
  if (k % 2 == 0 || kernel.rows() != k * k || kernel.cols() != ch)
    shape_mismatch("depthwise_conv2d", x, kernel);
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(height), W = static_cast<std::ptrdiff_t>(width);

  // Visits every (output pixel, input pixel, tap) triple in a fixed order.
  auto for_each_tap = [=](auto&& fn) {
    for (std::ptrdiff_t y = 0; y < H; ++y)
      for (std::ptrdiff_t xx = 0; xx < W; ++xx)
        for (std::size_t ty = 0; ty < k; ++ty) {
          const std::ptrdiff_t sy = y + static_cast<std::ptrdiff_t>(ty) - pad;
          if (sy < 0 || sy >= H) continue;
          for (std::size_t tx = 0; tx < k; ++tx) {
            const std::ptrdiff_t sx = xx + static_cast<std::ptrdiff_t>(tx) - pad;
            if (sx < 0 || sx >= W) continue;
            fn(static_cast<std::size_t>(y * W + xx), static_cast<std::size_t>(sy * W + sx),
               ty * k + tx);
          }
        }
  };

  std::vector<double> out(height * width * ch, 0.0);
  const auto& kt = kernels::active();
  const double* in = x.data().data();
  const double* w = kernel.data().data();
  for_each_tap([&](std::size_t o, std::size_t i, std::size_t t) {
    kt.mul_acc(in + i * ch, w + t * ch, out.data() + o * ch, ch);
  });
  return make_result({height * width, ch}, std::move(out), "depthwise_conv2d", {x, kernel},
                     [for_each_tap, ch](Node& self) {
                       const auto& kt = kernels::active();
                       auto gx = pgrad(self, 0);
                       auto gw = pgrad(self, 1);
                       const double* in = self.parents[0]->data.data();
                       const double* w = self.parents[1]->data.data();
                       const double* go = self.grad.data();
                       for_each_tap([&](std::size_t o, std::size_t i, std::size_t t) {
                         if (!gx.empty()) kt.mul_acc(go + o * ch, w + t * ch, gx.data() + i * ch, ch);
                         if (!gw.empty()) kt.mul_acc(go + o * ch, in + i * ch, gw.data() + t * ch, ch);
                       });
                     });
}

}  // namespace avsc::num
