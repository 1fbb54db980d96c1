#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "pairsynth/tensor.hpp"

namespace pairsynth::ad {

class Node;
using NodePtr = std::shared_ptr<Node>;

// One value in an eagerly-evaluated computation graph. Every operation below
// computes its result immediately and records its inputs; backward rules are
// themselves expressed through these operations, so gradients are ordinary
// graph nodes and gradients-of-gradients come for free (needed by the
// gradient penalty, which differentiates an input-gradient norm with respect
// to network parameters).
class Node {
 public:
  Tensor value;
  bool requires_grad = false;
  std::vector<NodePtr> inputs;

  Node(Tensor v, std::vector<NodePtr> ins);
  virtual ~Node() = default;
  virtual const char* op_name() const { return "leaf"; }

  // Appends one gradient node per input to `grads` (null for inputs that need
  // none). `self` is this node as a shared pointer, `grad_out` the gradient of
  // the final scalar w.r.t. this node's value.
  virtual void backward(const NodePtr& self, const NodePtr& grad_out,
                        std::vector<NodePtr>& grads) const;

  // Ops that cannot participate in higher-order differentiation return false;
  // grad(..., create_graph=true) refuses to traverse them.
  virtual bool differentiable_twice() const { return true; }
};

NodePtr constant(Tensor v);
NodePtr leaf(Tensor v, bool requires_grad = true);
// New constant sharing the value's storage, cut off from the graph.
NodePtr detach(const NodePtr& x);

// ---- elementwise (shapes must match exactly; no implicit broadcasting) ----
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr mul(const NodePtr& a, const NodePtr& b);
NodePtr div(const NodePtr& a, const NodePtr& b);
NodePtr neg(const NodePtr& a);
NodePtr scalar_mul(const NodePtr& a, double c);
NodePtr scalar_add(const NodePtr& a, double c);
NodePtr exp(const NodePtr& a);
NodePtr log(const NodePtr& a);
NodePtr sqrt(const NodePtr& a);
NodePtr tanh(const NodePtr& a);
NodePtr sigmoid(const NodePtr& a);

// ---- structure ----
NodePtr reshape(const NodePtr& a, std::vector<int64_t> shape);
NodePtr transpose2d(const NodePtr& a);
NodePtr matmul(const NodePtr& a, const NodePtr& b);  // (m,k) x (k,n)
// Sum of all elements -> shape {1}.
NodePtr reduce_sum_all(const NodePtr& a);
// Sum over `axes`, keeping reduced dims as size 1.
NodePtr reduce_sum_axes(const NodePtr& a, std::vector<int> axes);
// Broadcast of a {1} scalar to `shape`.
NodePtr expand_scalar(const NodePtr& a, std::vector<int64_t> shape);
// Broadcast size-1 dims of `a` up to `shape` (ranks must match).
NodePtr expand(const NodePtr& a, std::vector<int64_t> shape);
// Concatenate along axis 1 of NCHW tensors.
NodePtr concat_ch(const NodePtr& a, const NodePtr& b);
// Channels [c0, c1) of an NCHW tensor.
NodePtr slice_ch(const NodePtr& a, int64_t c0, int64_t c1);

// ---- convolution (NCHW; weight (co, ci, k, k)) ----
NodePtr conv2d(const NodePtr& x, const NodePtr& w, int stride, int pad);
// Adjoint of conv2d w.r.t. its input; also the forward map of a stride-`stride`
// transposed convolution. Output spatial size is (h, w).
NodePtr conv2d_dx(const NodePtr& gy, const NodePtr& w, int stride, int pad, int64_t out_h,
                  int64_t out_w);
// Adjoint of conv2d w.r.t. its weight.
NodePtr conv2d_dw(const NodePtr& x, const NodePtr& gy, int stride, int pad, int64_t k);

// ---- sub-image interlacing (see stitch.hpp for the tensor-level kernels) ----
NodePtr stitch(const NodePtr& subs, int f);
NodePtr unstitch(const NodePtr& img, int f);

// ---- composites ----
NodePtr relu(const NodePtr& a);
NodePtr leaky_relu(const NodePtr& a, double slope = 0.2);
NodePtr abs(const NodePtr& a);
NodePtr square(const NodePtr& a);
NodePtr mean_all(const NodePtr& a);
// log(1 + exp(x)), overflow-safe.
NodePtr softplus(const NodePtr& a);
// Row-wise log-softmax of an (n, k) matrix.
NodePtr log_softmax_rows(const NodePtr& a);
// Mean cross-entropy of (n, k) logits against integer labels.
NodePtr cross_entropy(const NodePtr& logits, const std::vector<int>& labels);
// Per-sample, per-channel normalization of an NCHW tensor with learned affine.
NodePtr instance_norm(const NodePtr& x, const NodePtr& gamma, const NodePtr& beta,
                      double eps = 1e-5);

// Gradients of a scalar `output` w.r.t. `wrt`. With create_graph the returned
// nodes stay connected for higher-order differentiation; otherwise they are
// detached constants. Unreachable entries come back as zeros.
std::vector<NodePtr> grad(const NodePtr& output, const std::vector<NodePtr>& wrt,
                          bool create_graph);

}  // namespace pairsynth::ad
