// SPDX-License-Identifier: Apache-2.0
#include "lineocr/optim.hpp"

#include <cmath>

namespace lineocr {

template <typename T>
double clip_global_norm(const std::vector<Tensor<T>*>& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ParamError("clip max_norm must be positive");
  double sq = 0.0;
  for (const Tensor<T>* g : grads) {
    for (T v : g->data()) sq += static_cast<double>(v) * static_cast<double>(v);
  }
  const double norm = std::sqrt(sq);
  // Slack of 1e-6 relative absorbs the rounding of an earlier clip so that
  // clipping twice equals clipping once.
  if (norm <= max_norm * (1.0 + 1e-6)) return 1.0;
  const double scale = max_norm / norm;
  for (Tensor<T>* g : grads) {
    for (T& v : g->data()) v = static_cast<T>(static_cast<double>(v) * scale);
  }
  return scale;
}

template <typename T>
double clip_global_norm(std::vector<LayerParams<T>>& params, double max_norm) {
  std::vector<Tensor<T>*> grads;
  for (auto& p : params) {
    for (auto& [role, g] : p.grads) grads.push_back(&g);
  }
  return clip_global_norm(grads, max_norm);
}

template <typename T>
double global_norm(const std::vector<LayerParams<T>>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    for (const auto& [role, g] : p.grads) {
      for (T v : g.data()) sq += static_cast<double>(v) * static_cast<double>(v);
    }
  }
  return std::sqrt(sq);
}

template <typename T>
void adam_step(std::vector<LayerParams<T>>& params, AdamState<T>& state) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (auto& p : params) {
    for (auto& [role, w] : p.weights) {
      auto git = p.grads.find(role);
      if (git == p.grads.end()) continue;
      Tensor<T>& g = git->second;
      if (!g.same_shape(w)) throw ShapeError("gradient of " + p.name + "/" + role + " does not match its weight");
      const std::string key = p.name + "/" + role;
      auto [mit, m_new] = state.first_moment.try_emplace(key, w.shape());
      auto [vit, v_new] = state.second_moment.try_emplace(key, w.shape());
      Tensor<T>& m = mit->second;
      Tensor<T>& v = vit->second;
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = static_cast<double>(g[i]);
        const double mi = state.beta1 * static_cast<double>(m[i]) + (1.0 - state.beta1) * gi;
        const double vi = state.beta2 * static_cast<double>(v[i]) + (1.0 - state.beta2) * gi * gi;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        const double m_hat = mi / correction1;
        const double v_hat = vi / correction2;
        w[i] = static_cast<T>(static_cast<double>(w[i]) - state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon));
      }
      g.fill(T(0));
    }
  }
}

template double clip_global_norm<float>(const std::vector<Tensor<float>*>&, double);
template double clip_global_norm<double>(const std::vector<Tensor<double>*>&, double);
template double clip_global_norm<float>(std::vector<LayerParams<float>>&, double);
template double clip_global_norm<double>(std::vector<LayerParams<double>>&, double);
template double global_norm<float>(const std::vector<LayerParams<float>>&);
template double global_norm<double>(const std::vector<LayerParams<double>>&);
template void adam_step<float>(std::vector<LayerParams<float>>&, AdamState<float>&);
template void adam_step<double>(std::vector<LayerParams<double>>&, AdamState<double>&);

}  // namespace lineocr
