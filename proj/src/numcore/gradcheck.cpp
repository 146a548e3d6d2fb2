#include "avsc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace avsc::num {

GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                           double h, double tol, std::vector<std::string> names) {
  for (auto& p : params) p.zero_grad();
  backward(f());

  GradCheckReport report;
  report.tolerance = tol;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    const std::vector<double> analytic(p.grad().begin(), p.grad().end());
    ParamCheck check;
    check.name = pi < names.size() ? names[pi] : "param" + std::to_string(pi);
    auto values = p.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = f().item();
      values[i] = saved - h;
      const double down = f().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
      const double err = std::abs(analytic[i] - numeric) / denom;
      if (i == 0 || err > check.max_rel_error || std::isnan(err)) {
        check.max_rel_error = err;
        check.worst_index = i;
        check.analytic = analytic[i];
        check.numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.params.push_back(std::move(check));
  }
  report.passed = report.max_rel_error <= tol && std::isfinite(report.max_rel_error);
  for (auto& p : params) p.zero_grad();
  return report;
}

GradCheckReport directional_check(const std::function<Tensor()>& f, std::vector<Tensor> params,
                                  std::uint64_t seed, double h, double tol,
                                  std::vector<std::string> names) {
  for (auto& p : params) p.zero_grad();
  backward(f());

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GradCheckReport report;
  report.tolerance = tol;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    const auto g = p.grad();
    std::vector<double> dir(p.numel());
    double analytic = 0.0;
    for (std::size_t i = 0; i < dir.size(); ++i) {
      dir[i] = u(rng);
      analytic += g[i] * dir[i];
    }
    auto values = p.mutable_data();
    const std::vector<double> saved(values.begin(), values.end());
    for (std::size_t i = 0; i < dir.size(); ++i) values[i] = saved[i] + h * dir[i];
    const double up = f().item();
    for (std::size_t i = 0; i < dir.size(); ++i) values[i] = saved[i] - h * dir[i];
    const double down = f().item();
    std::copy(saved.begin(), saved.end(), values.begin());
    const double numeric = (up - down) / (2.0 * h);

    ParamCheck check;
    check.name = pi < names.size() ? names[pi] : "param" + std::to_string(pi);
    check.analytic = analytic;
    check.numeric = numeric;
    check.max_rel_error = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    if (std::isnan(check.max_rel_error)) check.max_rel_error = INFINITY;
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.params.push_back(std::move(check));
  }
  report.passed = report.max_rel_error <= tol && std::isfinite(report.max_rel_error);
  for (auto& p : params) p.zero_grad();
  return report;
}

}  // namespace avsc::num
