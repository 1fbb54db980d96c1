#include "pairsynth/optim.hpp"

#include <algorithm>
#include <cmath>

#include "pairsynth/errors.hpp"

namespace pairsynth {

Adam::Adam(const nn::ParamList& params, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& np : params) {
    m_.push_back(Tensor::zeros(np.p->value.shape()));
    v_.push_back(Tensor::zeros(np.p->value.shape()));
  }
}

void Adam::step(const nn::ParamList& params, const std::vector<ad::NodePtr>& grads) {
  if (params.size() != m_.size() || grads.size() != params.size())
    throw ShapeError("adam: parameter/gradient list does not match optimizer state");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i].p->value;
    const Tensor& g = grads[i]->value;
    check_same_shape(p, g, "adam");
    double* pm = m_[i].data();
    double* pv = v_[i].data();
    double* pp = p.data();
    const double* pg = g.data();
    for (int64_t j = 0; j < p.numel(); ++j) {
      pm[j] = beta1_ * pm[j] + (1.0 - beta1_) * pg[j];
      pv[j] = beta2_ * pv[j] + (1.0 - beta2_) * pg[j] * pg[j];
      pp[j] -= lr_ * (pm[j] / bc1) / (std::sqrt(pv[j] / bc2) + eps_);
    }
  }
}

void clip_params(const nn::ParamList& params, double c) {
  for (const auto& np : params) {
    double* p = np.p->value.data();
    for (int64_t j = 0; j < np.p->value.numel(); ++j) p[j] = std::clamp(p[j], -c, c);
  }
}

}  // namespace pairsynth
