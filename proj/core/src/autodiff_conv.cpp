#include <cstring>
#include <vector>

#include "pairsynth/autodiff.hpp"
#include "pairsynth/errors.hpp"
#include "gemm.hpp"

// im2col-backed convolution primitives. conv2d, conv2d_dx and conv2d_dw form
// a closed trio under differentiation: each one's backward is expressed with
// the other two, which is what makes the gradient penalty twice-differentiable.

namespace pairsynth::ad {

namespace {

struct ConvDims {
  int64_t n, ci, h, w, co, k, ho, wo;
  int stride, pad;
};

int64_t conv_out(int64_t in, int64_t k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// col is (ci*k*k, n*ho*wo); column j = sample*ho*wo + oh*wo + ow.
void im2col(const double* x, const ConvDims& d, double* col) {
  const int64_t howo = d.ho * d.wo;
  const int64_t cols = d.n * howo;
  for (int64_t ci = 0; ci < d.ci; ++ci) {
    for (int64_t kr = 0; kr < d.k; ++kr) {
      for (int64_t kc = 0; kc < d.k; ++kc) {
        double* crow = col + ((ci * d.k + kr) * d.k + kc) * cols;
        for (int64_t in = 0; in < d.n; ++in) {
          const double* xs = x + (in * d.ci + ci) * d.h * d.w;
          for (int64_t oh = 0; oh < d.ho; ++oh) {
            int64_t ih = oh * d.stride - d.pad + kr;
            double* crow_o = crow + in * howo + oh * d.wo;
            if (ih < 0 || ih >= d.h) {
              std::memset(crow_o, 0, sizeof(double) * d.wo);
              continue;
            }
            for (int64_t ow = 0; ow < d.wo; ++ow) {
              int64_t iw = ow * d.stride - d.pad + kc;
              crow_o[ow] = (iw >= 0 && iw < d.w) ? xs[ih * d.w + iw] : 0.0;
            }
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add col back into the image.
void col2im(const double* col, const ConvDims& d, double* x) {
  const int64_t howo = d.ho * d.wo;
  const int64_t cols = d.n * howo;
  std::memset(x, 0, sizeof(double) * d.n * d.ci * d.h * d.w);
  for (int64_t ci = 0; ci < d.ci; ++ci) {
    for (int64_t kr = 0; kr < d.k; ++kr) {
      for (int64_t kc = 0; kc < d.k; ++kc) {
        const double* crow = col + ((ci * d.k + kr) * d.k + kc) * cols;
        for (int64_t in = 0; in < d.n; ++in) {
          double* xs = x + (in * d.ci + ci) * d.h * d.w;
          for (int64_t oh = 0; oh < d.ho; ++oh) {
            int64_t ih = oh * d.stride - d.pad + kr;
            if (ih < 0 || ih >= d.h) continue;
            const double* crow_o = crow + in * howo + oh * d.wo;
            for (int64_t ow = 0; ow < d.wo; ++ow) {
              int64_t iw = ow * d.stride - d.pad + kc;
              if (iw >= 0 && iw < d.w) xs[ih * d.w + iw] += crow_o[ow];
            }
          }
        }
      }
    }
  }
}

// (n, c, h, w) -> (c, n*h*w)
void to_channel_major(const double* y, int64_t n, int64_t c, int64_t hw, double* out) {
  for (int64_t in = 0; in < n; ++in)
    for (int64_t ic = 0; ic < c; ++ic)
      std::memcpy(out + ic * n * hw + in * hw, y + (in * c + ic) * hw, sizeof(double) * hw);
}

// (c, n*h*w) -> (n, c, h, w)
void from_channel_major(const double* y, int64_t n, int64_t c, int64_t hw, double* out) {
  for (int64_t in = 0; in < n; ++in)
    for (int64_t ic = 0; ic < c; ++ic)
      std::memcpy(out + (in * c + ic) * hw, y + ic * n * hw + in * hw, sizeof(double) * hw);
}

ConvDims conv_dims(const Tensor& x, const Tensor& w, int stride, int pad) {
  if (x.rank() != 4 || w.rank() != 4)
    throw ShapeError("conv2d: expected NCHW input and (co, ci, k, k) weight, got " +
                     x.shape_str() + " and " + w.shape_str());
  if (w.dim(2) != w.dim(3)) throw ShapeError("conv2d: non-square kernel " + w.shape_str());
  if (x.dim(1) != w.dim(1))
    throw ShapeError("conv2d: channel mismatch between " + x.shape_str() + " and " +
                     w.shape_str());
  if (stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  ConvDims d;
  d.n = x.dim(0);
  d.ci = x.dim(1);
  d.h = x.dim(2);
  d.w = x.dim(3);
  d.co = w.dim(0);
  d.k = w.dim(2);
  d.stride = stride;
  d.pad = pad;
  d.ho = conv_out(d.h, d.k, stride, pad);
  d.wo = conv_out(d.w, d.k, stride, pad);
  if (d.ho < 1 || d.wo < 1)
    throw ShapeError("conv2d: kernel larger than padded input, " + x.shape_str() + " with " +
                     w.shape_str());
  return d;
}

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const ConvDims& d) {
  const int64_t cikk = d.ci * d.k * d.k;
  const int64_t cols = d.n * d.ho * d.wo;
  std::vector<double> col(cikk * cols);
  im2col(x.data(), d, col.data());
  std::vector<double> y(d.co * cols);
  detail::gemm_nn(w.data(), col.data(), y.data(), d.co, cikk, cols, false);
  Tensor out({d.n, d.co, d.ho, d.wo});
  from_channel_major(y.data(), d.n, d.co, d.ho * d.wo, out.data());
  return out;
}

Tensor conv2d_dx_forward(const Tensor& gy, const Tensor& w, const ConvDims& d) {
  const int64_t cikk = d.ci * d.k * d.k;
  const int64_t cols = d.n * d.ho * d.wo;
  std::vector<double> gyc(d.co * cols);
  to_channel_major(gy.data(), d.n, d.co, d.ho * d.wo, gyc.data());
  std::vector<double> colg(cikk * cols);
  detail::gemm_tn(w.data(), gyc.data(), colg.data(), cikk, d.co, cols, false);
  Tensor out({d.n, d.ci, d.h, d.w});
  col2im(colg.data(), d, out.data());
  return out;
}

Tensor conv2d_dw_forward(const Tensor& x, const Tensor& gy, const ConvDims& d) {
  const int64_t cikk = d.ci * d.k * d.k;
  const int64_t cols = d.n * d.ho * d.wo;
  std::vector<double> col(cikk * cols);
  im2col(x.data(), d, col.data());
  std::vector<double> gyc(d.co * cols);
  to_channel_major(gy.data(), d.n, d.co, d.ho * d.wo, gyc.data());
  Tensor out({d.co, d.ci, d.k, d.k});
  detail::gemm_nt(gyc.data(), col.data(), out.data(), d.co, cols, cikk, false);
  return out;
}

struct Conv2dNode : Node {
  int stride, pad;
  Conv2dNode(Tensor v, std::vector<NodePtr> ins, int s, int p)
      : Node(std::move(v), std::move(ins)), stride(s), pad(p) {}
  const char* op_name() const override { return "conv2d"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    const Tensor& x = inputs[0]->value;
    const Tensor& w = inputs[1]->value;
    gs = {conv2d_dx(g, inputs[1], stride, pad, x.dim(2), x.dim(3)),
          conv2d_dw(inputs[0], g, stride, pad, w.dim(2))};
  }
};

struct Conv2dDxNode : Node {
  int stride, pad;
  Conv2dDxNode(Tensor v, std::vector<NodePtr> ins, int s, int p)
      : Node(std::move(v), std::move(ins)), stride(s), pad(p) {}
  const char* op_name() const override { return "conv2d_dx"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    const Tensor& w = inputs[1]->value;
    gs = {conv2d(g, inputs[1], stride, pad), conv2d_dw(g, inputs[0], stride, pad, w.dim(2))};
  }
};

struct Conv2dDwNode : Node {
  int stride, pad;
  Conv2dDwNode(Tensor v, std::vector<NodePtr> ins, int s, int p)
      : Node(std::move(v), std::move(ins)), stride(s), pad(p) {}
  const char* op_name() const override { return "conv2d_dw"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    const Tensor& x = inputs[0]->value;
    gs = {conv2d_dx(inputs[1], g, stride, pad, x.dim(2), x.dim(3)), conv2d(inputs[0], g, stride, pad)};
  }
};

}  // namespace

NodePtr conv2d(const NodePtr& x, const NodePtr& w, int stride, int pad) {
  ConvDims d = conv_dims(x->value, w->value, stride, pad);
  return std::make_shared<Conv2dNode>(conv2d_forward(x->value, w->value, d),
                                      std::vector<NodePtr>{x, w}, stride, pad);
}

NodePtr conv2d_dx(const NodePtr& gy, const NodePtr& w, int stride, int pad, int64_t h, int64_t w_) {
  const Tensor& vy = gy->value;
  const Tensor& vw = w->value;
  if (vy.rank() != 4 || vw.rank() != 4 || vy.dim(1) != vw.dim(0))
    throw ShapeError("conv2d_dx: incompatible shapes " + vy.shape_str() + " and " +
                     vw.shape_str());
  ConvDims d;
  d.n = vy.dim(0);
  d.co = vy.dim(1);
  d.ho = vy.dim(2);
  d.wo = vy.dim(3);
  d.ci = vw.dim(1);
  d.k = vw.dim(2);
  d.stride = stride;
  d.pad = pad;
  d.h = h;
  d.w = w_;
  if (conv_out(h, d.k, stride, pad) != d.ho || conv_out(w_, d.k, stride, pad) != d.wo)
    throw ShapeError("conv2d_dx: target size " + shape_str({h, w_}) +
                     " inconsistent with " + vy.shape_str());
  return std::make_shared<Conv2dDxNode>(conv2d_dx_forward(vy, vw, d),
                                        std::vector<NodePtr>{gy, w}, stride, pad);
}

NodePtr conv2d_dw(const NodePtr& x, const NodePtr& gy, int stride, int pad, int64_t k) {
  const Tensor& vx = x->value;
  const Tensor& vy = gy->value;
  if (vx.rank() != 4 || vy.rank() != 4 || vx.dim(0) != vy.dim(0))
    throw ShapeError("conv2d_dw: incompatible shapes " + vx.shape_str() + " and " +
                     vy.shape_str());
  ConvDims d;
  d.n = vx.dim(0);
  d.ci = vx.dim(1);
  d.h = vx.dim(2);
  d.w = vx.dim(3);
  d.co = vy.dim(1);
  d.k = k;
  d.stride = stride;
  d.pad = pad;
  d.ho = vy.dim(2);
  d.wo = vy.dim(3);
  if (conv_out(d.h, k, stride, pad) != d.ho || conv_out(d.w, k, stride, pad) != d.wo)
    throw ShapeError("conv2d_dw: gradient size " + vy.shape_str() + " inconsistent with input " +
                     vx.shape_str());
  return std::make_shared<Conv2dDwNode>(conv2d_dw_forward(vx, vy, d),
                                        std::vector<NodePtr>{x, gy}, stride, pad);
}

}  // namespace pairsynth::ad
