#include "imcgae/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace imcgae {

void adam_step(std::vector<NumArray*>& params, const std::vector<const NumArray*>& grads,
               AdamState& state) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
  if (state.m.empty()) {
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const auto* p : params) {
      state.m.push_back(NumArray::zeros_like(*p));
      state.v.push_back(NumArray::zeros_like(*p));
    }
  }
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state does not match parameter count");

  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (std::size_t k = 0; k < params.size(); ++k) {
    NumArray& p = *params[k];
    const NumArray& g = *grads[k];
    if (!p.same_shape(g) || !p.same_shape(state.m[k]))
      throw std::invalid_argument("adam_step: shape mismatch");
    double* mp = state.m[k].data.data();
    double* vp = state.v[k].data.data();
    double* pp = p.data.data();
    const double* gp = g.data.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      mp[i] = state.beta1 * mp[i] + (1.0 - state.beta1) * gp[i];
      vp[i] = state.beta2 * vp[i] + (1.0 - state.beta2) * gp[i] * gp[i];
      const double mhat = mp[i] / bc1;
      const double vhat = vp[i] / bc2;
      pp[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace imcgae
