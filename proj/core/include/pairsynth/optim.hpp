#pragma once

#include <cstdint>
#include <vector>

#include "pairsynth/nn.hpp"

namespace pairsynth {

// Adam bound to one parameter group. Moments live here and are checkpointed.
class Adam {
 public:
  Adam() = default;
  Adam(const nn::ParamList& params, double lr, double beta1 = 0.5, double beta2 = 0.9,
       double eps = 1e-8);

  // grads[i] matches params[i] from construction.
  void step(const nn::ParamList& params, const std::vector<ad::NodePtr>& grads);

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  int64_t t() const { return t_; }

  // Checkpoint access: first and second moments per parameter, plus t.
  std::vector<Tensor>& m() { return m_; }
  std::vector<Tensor>& v() { return v_; }
  void set_t(int64_t t) { t_ = t; }

 private:
  double lr_ = 1e-4, beta1_ = 0.5, beta2_ = 0.9, eps_ = 1e-8;
  int64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

// Clamps every parameter to [-c, c]; the weight-clipping Lipschitz fallback.
void clip_params(const nn::ParamList& params, double c);

}  // namespace pairsynth
