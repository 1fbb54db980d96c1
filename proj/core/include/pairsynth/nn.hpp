#pragma once

#include <string>
#include <vector>

#include "pairsynth/autodiff.hpp"
#include "pairsynth/rng.hpp"

namespace pairsynth::nn {

struct NamedParam {
  std::string name;
  ad::NodePtr p;
};

using ParamList = std::vector<NamedParam>;

enum class Init { he, xavier };

// Parameter leaves live as long as the layer; each forward builds fresh graph
// nodes on top of them. Optimizers update the leaf values in place.

struct Linear {
  ad::NodePtr w, b;  // w: (in, out), b: (out)
  int64_t in = 0, out = 0;

  Linear() = default;
  Linear(int64_t in, int64_t out, Rng& rng, Init init = Init::he);
  ad::NodePtr forward(const ad::NodePtr& x) const;  // (n, in) -> (n, out)
  void collect(ParamList& out_params, const std::string& prefix) const;
};

struct Conv2d {
  ad::NodePtr w, b;  // w: (co, ci, k, k), b: (co)
  int64_t ci = 0, co = 0, k = 3;
  int stride = 1, pad = 1;

  Conv2d() = default;
  Conv2d(int64_t ci, int64_t co, int64_t k, int stride, int pad, Rng& rng, Init init = Init::he);
  ad::NodePtr forward(const ad::NodePtr& x) const;
  void collect(ParamList& out_params, const std::string& prefix) const;
};

// Transposed convolution (fractional stride upsampling). The weight is stored
// in conv2d layout (ci, co, k, k) so forward is conv2d's input-adjoint.
struct ConvT2d {
  ad::NodePtr w, b;  // w: (ci, co, k, k), b: (co)
  int64_t ci = 0, co = 0, k = 4;
  int stride = 2, pad = 1;

  ConvT2d() = default;
  ConvT2d(int64_t ci, int64_t co, int64_t k, int stride, int pad, Rng& rng, Init init = Init::he);
  ad::NodePtr forward(const ad::NodePtr& x) const;
  void collect(ParamList& out_params, const std::string& prefix) const;
};

struct InstanceNorm2d {
  ad::NodePtr gamma, beta;
  int64_t ch = 0;

  InstanceNorm2d() = default;
  explicit InstanceNorm2d(int64_t ch);
  ad::NodePtr forward(const ad::NodePtr& x) const;
  void collect(ParamList& out_params, const std::string& prefix) const;
};

// Adds a (c)-shaped bias over the channel axis of an NCHW tensor.
ad::NodePtr bias_nchw(const ad::NodePtr& x, const ad::NodePtr& b);
// Adds a (f)-shaped bias over the rows of an (n, f) matrix.
ad::NodePtr bias_rows(const ad::NodePtr& x, const ad::NodePtr& b);

// Flattens (n, c, h, w) -> (n, c*h*w).
ad::NodePtr flatten(const ad::NodePtr& x);

// Copies grads or values between aligned parameter lists (checkpoint load).
void copy_values(const ParamList& dst, const std::vector<Tensor>& src);

int64_t param_count(const ParamList& params);

}  // namespace pairsynth::nn
