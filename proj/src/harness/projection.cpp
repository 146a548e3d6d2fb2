#include "avsc/projection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "avsc/errors.hpp"
#include "avsc/report.hpp"

namespace avsc::harness {

namespace {

void sym_mul(const std::vector<double>& a, std::size_t d, const double* x, double* y) {
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += a[i * d + j] * x[j];
    y[i] = s;
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  if (n > 0.0)
    for (double& x : v) x /= n;
  return n;
}

// Replaces v with a unit vector orthogonal to u, starting from the basis
// vector least aligned with u.
void reseed_orthogonal(std::vector<double>& v, const std::vector<double>& u) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < u.size(); ++i)
    if (std::abs(u[i]) < std::abs(u[best])) best = i;
  std::fill(v.begin(), v.end(), 0.0);
  v[best] = 1.0;
  const double p = dot(v, u);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * u[i];
  normalize(v);
}

void fix_sign(std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (v[best] < 0.0)
    for (double& x : v) x = -x;
}

}  // namespace

TopTwo top_two_eigen(const std::vector<double>& a, std::size_t d) {
  if (d == 0 || a.size() != d * d) throw ShapeError("top_two_eigen: matrix is not d x d");
  TopTwo out;
  std::vector<double> q0(d, 0.0), q1(d, 0.0), z0(d), z1(d);
  if (d == 1) {
    out.values = {a[0], 0.0};
    out.vectors = {1.0, 0.0};
    return out;
  }
  // Start from the two largest diagonal entries.
  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x * d + x] > a[y * d + y]; });
  // A small spread over all coordinates avoids starting orthogonal to the top axis.
  for (std::size_t i = 0; i < d; ++i) {
    q0[i] = 1e-3 * static_cast<double>(i + 1);
    q1[i] = 1e-3 * static_cast<double>(d - i);
  }
  q0[order[0]] += 1.0;
  q1[order[1]] += 1.0;
  normalize(q0);
  double p = dot(q1, q0);
  for (std::size_t i = 0; i < d; ++i) q1[i] -= p * q0[i];
  normalize(q1);

  double scale = 0.0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) {
    out.values = {0.0, 0.0};
    out.vectors.assign(2 * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      out.vectors[i * 2] = q0[i];
      out.vectors[i * 2 + 1] = q1[i];
    }
    return out;
  }

  double t00 = 0.0, t01 = 0.0, t11 = 0.0;
  constexpr std::size_t kMaxIter = 200000;
  for (std::size_t it = 1; it <= kMaxIter; ++it) {
    sym_mul(a, d, q0.data(), z0.data());
    sym_mul(a, d, q1.data(), z1.data());
    // Rayleigh-Ritz on span{q0, q1}: rotate the basis onto the eigenvectors
    // of the projected 2 x 2 matrix.
    t00 = dot(q0, z0);
    t01 = dot(q0, z1);
    t11 = dot(q1, z1);
    const double theta = 0.5 * std::atan2(2.0 * t01, t00 - t11);
    const double c = std::cos(theta), s = std::sin(theta);
    std::vector<double> r0(d), r1(d), w0(d), w1(d);
    for (std::size_t i = 0; i < d; ++i) {
      r0[i] = c * q0[i] + s * q1[i];
      r1[i] = -s * q0[i] + c * q1[i];
      w0[i] = c * z0[i] + s * z1[i];
      w1[i] = -s * z0[i] + c * z1[i];
    }
    const double l0 = dot(r0, w0), l1 = dot(r1, w1);
    double res = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      res = std::max({res, std::abs(w0[i] - l0 * r0[i]), std::abs(w1[i] - l1 * r1[i])});
    out.values = {l0, l1};
    q0 = r0;
    q1 = r1;
    out.iterations = it;
    if (res <= 1e-13 * scale) break;
    // Next subspace: A [q0 q1], re-orthonormalised.
    q0 = w0;
    q1 = w1;
    if (normalize(q0) <= 1e-300) reseed_orthogonal(q0, r1);
    p = dot(q1, q0);
    for (std::size_t i = 0; i < d; ++i) q1[i] -= p * q0[i];
    if (normalize(q1) <= 1e-12 * std::abs(l0) + 1e-300) reseed_orthogonal(q1, q0);
  }
  if (out.values[1] > out.values[0]) {
    std::swap(out.values[0], out.values[1]);
    std::swap(q0, q1);
  }
  fix_sign(q0);
  fix_sign(q1);
  out.vectors.assign(2 * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    out.vectors[i * 2] = q0[i];
    out.vectors[i * 2 + 1] = q1[i];
  }
  return out;
}

Projection pca_project(const std::vector<std::vector<double>>& rows, std::vector<std::string> labels) {
  if (rows.empty()) throw ShapeError("pca_project: no rows");
  const std::size_t n = rows.size(), d = rows[0].size();
  if (d == 0) throw ShapeError("pca_project: zero-width rows");
  for (const auto& r : rows)
    if (r.size() != d) throw ShapeError("pca_project: ragged rows");
  if (labels.size() != n) throw ShapeError("pca_project: label count differs from row count");

  std::vector<double> mean(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  for (double& m : mean) m /= static_cast<double>(n);
  std::vector<std::vector<double>> x(rows);
  for (auto& r : x)
    for (std::size_t j = 0; j < d; ++j) r[j] -= mean[j];

  std::vector<double> cov(d * d, 0.0);
  for (const auto& r : x)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov[i * d + j] += r[i] * r[j];
  for (double& c : cov) c /= static_cast<double>(n);

  const TopTwo eig = top_two_eigen(cov, d);
  Projection p;
  p.labels = std::move(labels);
  p.eigenvalues = eig.values;
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) trace += cov[i * d + i];
  const double floor = 1e-12 * std::max(trace, 1e-300);
  p.rank = (eig.values[0] > floor) + (eig.values[1] > floor);
  if (p.rank < 2)
    p.warnings.push_back("degenerate covariance: only " + std::to_string(p.rank) +
                         " principal axis available; missing coordinates set to 0");
  for (const auto& r : x) {
    std::array<double, 2> c{0.0, 0.0};
    for (std::size_t a = 0; a < p.rank; ++a)
      for (std::size_t j = 0; j < d; ++j) c[a] += r[j] * eig.vectors[j * 2 + a];
    p.coords.push_back(c);
  }
  return p;
}

Projection export_projection(const Checkpoint& ckpt) {
  const SceneModel model = model_from(ckpt);
  if (!model.audio() || !model.visual())
    throw ConfigError("project-weights: checkpoint needs both branches");
  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  auto take = [&](const branches::ClassifierHead& head, const std::string& kind) {
    const auto w = head.weight.data();
    for (std::size_t c = 0; c < head.classes(); ++c) {
      rows.emplace_back(w.begin() + c * head.dim(), w.begin() + (c + 1) * head.dim());
      labels.push_back(kind + std::to_string(c));
    }
  };
  take(model.audio()->head(), "event");
  take(model.visual()->head(), "object");
  return pca_project(rows, labels);
}

void write_projection_csv(const Projection& p, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "label,kind,index,x,y\n";
  for (std::size_t i = 0; i < p.labels.size(); ++i) {
    const auto& l = p.labels[i];
    const auto digit = l.find_first_of("0123456789");
    out << l << ',' << l.substr(0, digit) << ',' << (digit == std::string::npos ? "" : l.substr(digit))
        << ',' << format_double(p.coords[i][0]) << ',' << format_double(p.coords[i][1]) << '\n';
  }
}

}  // namespace avsc::harness
