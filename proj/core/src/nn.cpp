#include "pairsynth/nn.hpp"

#include <cmath>

#include "pairsynth/errors.hpp"

namespace pairsynth::nn {

namespace {

double init_std(Init init, int64_t fan_in) {
  switch (init) {
    case Init::he:
      return std::sqrt(2.0 / static_cast<double>(fan_in));
    case Init::xavier:
      return std::sqrt(1.0 / static_cast<double>(fan_in));
  }
  return 0.0;
}

}  // namespace

Linear::Linear(int64_t in_, int64_t out_, Rng& rng, Init init) : in(in_), out(out_) {
  w = ad::leaf(rng.normal_tensor({in, out}, 0.0, init_std(init, in)));
  b = ad::leaf(Tensor::zeros({out}));
}

ad::NodePtr Linear::forward(const ad::NodePtr& x) const {
  return bias_rows(ad::matmul(x, w), b);
}

void Linear::collect(ParamList& out_params, const std::string& prefix) const {
  out_params.push_back({prefix + ".w", w});
  out_params.push_back({prefix + ".b", b});
}

Conv2d::Conv2d(int64_t ci_, int64_t co_, int64_t k_, int stride_, int pad_, Rng& rng, Init init)
    : ci(ci_), co(co_), k(k_), stride(stride_), pad(pad_) {
  w = ad::leaf(rng.normal_tensor({co, ci, k, k}, 0.0, init_std(init, ci * k * k)));
  b = ad::leaf(Tensor::zeros({co}));
}

ad::NodePtr Conv2d::forward(const ad::NodePtr& x) const {
  return bias_nchw(ad::conv2d(x, w, stride, pad), b);
}

void Conv2d::collect(ParamList& out_params, const std::string& prefix) const {
  out_params.push_back({prefix + ".w", w});
  out_params.push_back({prefix + ".b", b});
}

ConvT2d::ConvT2d(int64_t ci_, int64_t co_, int64_t k_, int stride_, int pad_, Rng& rng, Init init)
    : ci(ci_), co(co_), k(k_), stride(stride_), pad(pad_) {
  w = ad::leaf(rng.normal_tensor({ci, co, k, k}, 0.0, init_std(init, ci * k * k)));
  b = ad::leaf(Tensor::zeros({co}));
}

ad::NodePtr ConvT2d::forward(const ad::NodePtr& x) const {
  const Tensor& v = x->value;
  if (v.rank() != 4 || v.dim(1) != ci)
    throw ShapeError("conv_transpose2d: input " + v.shape_str() + " does not have " +
                     std::to_string(ci) + " channels");
  int64_t h = (v.dim(2) - 1) * stride + k - 2 * pad;
  int64_t wd = (v.dim(3) - 1) * stride + k - 2 * pad;
  return bias_nchw(ad::conv2d_dx(x, w, stride, pad, h, wd), b);
}

void ConvT2d::collect(ParamList& out_params, const std::string& prefix) const {
  out_params.push_back({prefix + ".w", w});
  out_params.push_back({prefix + ".b", b});
}

InstanceNorm2d::InstanceNorm2d(int64_t ch_) : ch(ch_) {
  gamma = ad::leaf(Tensor::full({ch}, 1.0));
  beta = ad::leaf(Tensor::zeros({ch}));
}

ad::NodePtr InstanceNorm2d::forward(const ad::NodePtr& x) const {
  return ad::instance_norm(x, gamma, beta);
}

void InstanceNorm2d::collect(ParamList& out_params, const std::string& prefix) const {
  out_params.push_back({prefix + ".gamma", gamma});
  out_params.push_back({prefix + ".beta", beta});
}

ad::NodePtr bias_nchw(const ad::NodePtr& x, const ad::NodePtr& b) {
  const auto& s = x->value.shape();
  return ad::add(x, ad::expand(ad::reshape(b, {1, b->value.numel(), 1, 1}), s));
}

ad::NodePtr bias_rows(const ad::NodePtr& x, const ad::NodePtr& b) {
  const auto& s = x->value.shape();
  return ad::add(x, ad::expand(ad::reshape(b, {1, b->value.numel()}), s));
}

ad::NodePtr flatten(const ad::NodePtr& x) {
  const Tensor& v = x->value;
  return ad::reshape(x, {v.dim(0), v.numel() / v.dim(0)});
}

void copy_values(const ParamList& dst, const std::vector<Tensor>& src) {
  if (dst.size() != src.size())
    throw ShapeError("parameter count mismatch: " + std::to_string(dst.size()) + " vs " +
                     std::to_string(src.size()));
  for (size_t i = 0; i < dst.size(); ++i) {
    Tensor& t = dst[i].p->value;
    if (!t.same_shape(src[i]))
      throw ShapeError("parameter '" + dst[i].name + "' shape " + t.shape_str() +
                       " does not match stored " + src[i].shape_str());
    std::copy(src[i].data(), src[i].data() + src[i].numel(), t.data());
  }
}

int64_t param_count(const ParamList& params) {
  int64_t n = 0;
  for (const auto& np : params) n += np.p->value.numel();
  return n;
}

}  // namespace pairsynth::nn
