#include "avsc/optim.hpp"

#include <cmath>

#include "avsc/errors.hpp"

namespace avsc::harness {

void adamw_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                  std::span<double> v, std::uint64_t step, const OptimizerConfig& opt) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size())
    throw ShapeError("adamw: parameter, gradient and moment sizes differ (" +
                     std::to_string(param.size()) + " vs " + std::to_string(grad.size()) + ")");
  if (step == 0) throw ContractError("adamw: step index is 1-based");
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * grad[i];
    v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    param[i] -= opt.lr * (m_hat / (std::sqrt(v_hat) + opt.eps) + opt.weight_decay * param[i]);
  }
}

void adamw_step(std::span<num::Tensor> params, std::span<const std::vector<double>> grads,
                AdamWState& state, const OptimizerConfig& opt) {
  if (grads.size() != params.size())
    throw ShapeError("adamw: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adamw: state does not match parameters");
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i)
    adamw_update(params[i].mutable_data(), grads[i], state.m[i], state.v[i], state.step, opt);
}

void adamw_step(std::span<num::Tensor> params, AdamWState& state, const OptimizerConfig& opt) {
  std::vector<std::vector<double>> grads;
  grads.reserve(params.size());
  for (const auto& p : params) {
    const auto g = p.grad();
    grads.emplace_back(g.begin(), g.end());
  }
  adamw_step(params, grads, state, opt);
}

}  // namespace avsc::harness
