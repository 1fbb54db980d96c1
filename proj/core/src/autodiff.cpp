#include "pairsynth/autodiff.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "pairsynth/errors.hpp"
#include "gemm.hpp"

namespace pairsynth::ad {

Node::Node(Tensor v, std::vector<NodePtr> ins) : value(std::move(v)), inputs(std::move(ins)) {
  for (const auto& in : inputs)
    if (in && in->requires_grad) requires_grad = true;
}

void Node::backward(const NodePtr&, const NodePtr&, std::vector<NodePtr>& grads) const {
  grads.assign(inputs.size(), nullptr);
}

NodePtr constant(Tensor v) {
  auto n = std::make_shared<Node>(std::move(v), std::vector<NodePtr>{});
  n->requires_grad = false;
  return n;
}

NodePtr leaf(Tensor v, bool requires_grad) {
  auto n = std::make_shared<Node>(std::move(v), std::vector<NodePtr>{});
  n->requires_grad = requires_grad;
  return n;
}

NodePtr detach(const NodePtr& x) { return constant(x->value); }

namespace {

Tensor map2(const Tensor& a, const Tensor& b, double (*f)(double, double)) {
  Tensor out(a.shape());
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) po[i] = f(pa[i], pb[i]);
  return out;
}

Tensor map1(const Tensor& a, double (*f)(double)) {
  Tensor out(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  for (int64_t i = 0; i < a.numel(); ++i) po[i] = f(pa[i]);
  return out;
}

struct AddNode : Node {
  using Node::Node;
  const char* op_name() const override { return "add"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {g, g};
  }
};

struct SubNode : Node {
  using Node::Node;
  const char* op_name() const override { return "sub"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {g, neg(g)};
  }
};

struct NegNode : Node {
  using Node::Node;
  const char* op_name() const override { return "neg"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {neg(g)};
  }
};

struct MulNode : Node {
  using Node::Node;
  const char* op_name() const override { return "mul"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {mul(g, inputs[1]), mul(g, inputs[0])};
  }
};

struct DivNode : Node {
  using Node::Node;
  const char* op_name() const override { return "div"; }
  void backward(const NodePtr& self, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {div(g, inputs[1]), neg(div(mul(g, self), inputs[1]))};
  }
};

struct ScalarMulNode : Node {
  double c;
  ScalarMulNode(Tensor v, std::vector<NodePtr> ins, double c_) : Node(std::move(v), std::move(ins)), c(c_) {}
  const char* op_name() const override { return "scalar_mul"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {scalar_mul(g, c)};
  }
};

struct ScalarAddNode : Node {
  using Node::Node;
  const char* op_name() const override { return "scalar_add"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {g};
  }
};

struct ExpNode : Node {
  using Node::Node;
  const char* op_name() const override { return "exp"; }
  void backward(const NodePtr& self, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {mul(g, self)};
  }
};

struct LogNode : Node {
  using Node::Node;
  const char* op_name() const override { return "log"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {div(g, inputs[0])};
  }
};

struct SqrtNode : Node {
  using Node::Node;
  const char* op_name() const override { return "sqrt"; }
  void backward(const NodePtr& self, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {div(scalar_mul(g, 0.5), self)};
  }
};

struct TanhNode : Node {
  using Node::Node;
  const char* op_name() const override { return "tanh"; }
  void backward(const NodePtr& self, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {mul(g, scalar_add(neg(mul(self, self)), 1.0))};
  }
};

struct SigmoidNode : Node {
  using Node::Node;
  const char* op_name() const override { return "sigmoid"; }
  void backward(const NodePtr& self, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {mul(g, mul(self, scalar_add(neg(self), 1.0)))};
  }
};

struct ReshapeNode : Node {
  using Node::Node;
  const char* op_name() const override { return "reshape"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {reshape(g, inputs[0]->value.shape())};
  }
};

struct Transpose2DNode : Node {
  using Node::Node;
  const char* op_name() const override { return "transpose2d"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {transpose2d(g)};
  }
};

struct MatMulNode : Node {
  using Node::Node;
  const char* op_name() const override { return "matmul"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {matmul(g, transpose2d(inputs[1])), matmul(transpose2d(inputs[0]), g)};
  }
};

struct ReduceSumAllNode : Node {
  using Node::Node;
  const char* op_name() const override { return "reduce_sum_all"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {expand_scalar(g, inputs[0]->value.shape())};
  }
};

struct ReduceSumAxesNode : Node {
  std::vector<int> axes;
  ReduceSumAxesNode(Tensor v, std::vector<NodePtr> ins, std::vector<int> ax)
      : Node(std::move(v), std::move(ins)), axes(std::move(ax)) {}
  const char* op_name() const override { return "reduce_sum_axes"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {expand(g, inputs[0]->value.shape())};
  }
};

struct ExpandScalarNode : Node {
  using Node::Node;
  const char* op_name() const override { return "expand_scalar"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {reduce_sum_all(g)};
  }
};

struct ExpandNode : Node {
  std::vector<int> bcast_axes;
  ExpandNode(Tensor v, std::vector<NodePtr> ins, std::vector<int> ax)
      : Node(std::move(v), std::move(ins)), bcast_axes(std::move(ax)) {}
  const char* op_name() const override { return "expand"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {reduce_sum_axes(g, bcast_axes)};
  }
};

struct ConcatChNode : Node {
  using Node::Node;
  const char* op_name() const override { return "concat_ch"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    int64_t ca = inputs[0]->value.dim(1);
    int64_t c = value.dim(1);
    gs = {slice_ch(g, 0, ca), slice_ch(g, ca, c)};
  }
};

struct SliceChNode : Node {
  int64_t c0, c1;
  SliceChNode(Tensor v, std::vector<NodePtr> ins, int64_t c0_, int64_t c1_)
      : Node(std::move(v), std::move(ins)), c0(c0_), c1(c1_) {}
  const char* op_name() const override { return "slice_ch"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    // Embed g back at [c0, c1) between zero blocks.
    const auto& s = inputs[0]->value.shape();
    NodePtr out = g;
    if (c0 > 0) {
      Tensor z = Tensor::zeros({s[0], c0, s[2], s[3]});
      out = concat_ch(constant(std::move(z)), out);
    }
    if (c1 < s[1]) {
      Tensor z = Tensor::zeros({s[0], s[1] - c1, s[2], s[3]});
      out = concat_ch(out, constant(std::move(z)));
    }
    gs = {out};
  }
};

}  // namespace

NodePtr add(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a->value, b->value, "add");
  return std::make_shared<AddNode>(map2(a->value, b->value, [](double x, double y) { return x + y; }),
                                   std::vector<NodePtr>{a, b});
}

NodePtr sub(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a->value, b->value, "sub");
  return std::make_shared<SubNode>(map2(a->value, b->value, [](double x, double y) { return x - y; }),
                                   std::vector<NodePtr>{a, b});
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a->value, b->value, "mul");
  return std::make_shared<MulNode>(map2(a->value, b->value, [](double x, double y) { return x * y; }),
                                   std::vector<NodePtr>{a, b});
}

NodePtr div(const NodePtr& a, const NodePtr& b) {
  check_same_shape(a->value, b->value, "div");
  return std::make_shared<DivNode>(map2(a->value, b->value, [](double x, double y) { return x / y; }),
                                   std::vector<NodePtr>{a, b});
}

NodePtr neg(const NodePtr& a) {
  return std::make_shared<NegNode>(map1(a->value, [](double x) { return -x; }),
                                   std::vector<NodePtr>{a});
}

NodePtr scalar_mul(const NodePtr& a, double c) {
  Tensor out(a->value.shape());
  const double* pa = a->value.data();
  double* po = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] * c;
  return std::make_shared<ScalarMulNode>(std::move(out), std::vector<NodePtr>{a}, c);
}

NodePtr scalar_add(const NodePtr& a, double c) {
  Tensor out(a->value.shape());
  const double* pa = a->value.data();
  double* po = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] + c;
  return std::make_shared<ScalarAddNode>(std::move(out), std::vector<NodePtr>{a});
}

NodePtr exp(const NodePtr& a) {
  return std::make_shared<ExpNode>(map1(a->value, [](double x) { return std::exp(x); }),
                                   std::vector<NodePtr>{a});
}

NodePtr log(const NodePtr& a) {
  return std::make_shared<LogNode>(map1(a->value, [](double x) { return std::log(x); }),
                                   std::vector<NodePtr>{a});
}

NodePtr sqrt(const NodePtr& a) {
  return std::make_shared<SqrtNode>(map1(a->value, [](double x) { return std::sqrt(x); }),
                                    std::vector<NodePtr>{a});
}

NodePtr tanh(const NodePtr& a) {
  return std::make_shared<TanhNode>(map1(a->value, [](double x) { return std::tanh(x); }),
                                    std::vector<NodePtr>{a});
}

NodePtr sigmoid(const NodePtr& a) {
  return std::make_shared<SigmoidNode>(
      map1(a->value, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }),
      std::vector<NodePtr>{a});
}

NodePtr reshape(const NodePtr& a, std::vector<int64_t> shape) {
  return std::make_shared<ReshapeNode>(a->value.reshaped(std::move(shape)),
                                       std::vector<NodePtr>{a});
}

NodePtr transpose2d(const NodePtr& a) {
  const Tensor& v = a->value;
  if (v.rank() != 2) throw ShapeError("transpose2d: expected rank-2, got " + v.shape_str());
  int64_t m = v.dim(0), n = v.dim(1);
  Tensor out({n, m});
  const double* pa = v.data();
  double* po = out.data();
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) po[j * m + i] = pa[i * n + j];
  return std::make_shared<Transpose2DNode>(std::move(out), std::vector<NodePtr>{a});
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  const Tensor& va = a->value;
  const Tensor& vb = b->value;
  if (va.rank() != 2 || vb.rank() != 2 || va.dim(1) != vb.dim(0))
    throw ShapeError("matmul: incompatible shapes " + va.shape_str() + " and " + vb.shape_str());
  int64_t m = va.dim(0), k = va.dim(1), n = vb.dim(1);
  Tensor out({m, n});
  detail::gemm_nn(va.data(), vb.data(), out.data(), m, k, n, false);
  return std::make_shared<MatMulNode>(std::move(out), std::vector<NodePtr>{a, b});
}

NodePtr reduce_sum_all(const NodePtr& a) {
  double s = 0.0;
  const double* pa = a->value.data();
  for (int64_t i = 0; i < a->value.numel(); ++i) s += pa[i];
  return std::make_shared<ReduceSumAllNode>(Tensor::scalar(s), std::vector<NodePtr>{a});
}

namespace {

std::vector<int64_t> strides_of(const std::vector<int64_t>& shape) {
  std::vector<int64_t> st(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) st[i] = st[i + 1] * shape[i + 1];
  return st;
}

// Walks the full index space of `full_shape` while tracking the linear offset
// into a tensor shaped like `small_shape` (same rank, each dim either equal or
// 1). Calls fn(full_linear, small_linear).
template <typename Fn>
void for_each_broadcast(const std::vector<int64_t>& full_shape,
                        const std::vector<int64_t>& small_shape, Fn&& fn) {
  size_t r = full_shape.size();
  std::vector<int64_t> coord(r, 0);
  std::vector<int64_t> sstr = strides_of(small_shape);
  // Zero stride on broadcast dims.
  for (size_t i = 0; i < r; ++i)
    if (small_shape[i] == 1 && full_shape[i] != 1) sstr[i] = 0;
  int64_t total = 1;
  for (int64_t d : full_shape) total *= d;
  int64_t small_idx = 0;
  for (int64_t full_idx = 0; full_idx < total; ++full_idx) {
    fn(full_idx, small_idx);
    // Odometer increment.
    for (int i = static_cast<int>(r) - 1; i >= 0; --i) {
      ++coord[i];
      small_idx += sstr[i];
      if (coord[i] < full_shape[i]) break;
      coord[i] = 0;
      small_idx -= sstr[i] * full_shape[i];
    }
  }
}

}  // namespace

NodePtr reduce_sum_axes(const NodePtr& a, std::vector<int> axes) {
  const Tensor& v = a->value;
  std::sort(axes.begin(), axes.end());
  std::vector<int64_t> out_shape = v.shape();
  for (int ax : axes) {
    if (ax < 0 || ax >= static_cast<int>(v.rank()))
      throw ShapeError("reduce_sum_axes: axis out of range for " + v.shape_str());
    out_shape[ax] = 1;
  }
  Tensor out(out_shape);
  double* po = out.data();
  const double* pa = v.data();
  for_each_broadcast(v.shape(), out_shape,
                     [&](int64_t full, int64_t small) { po[small] += pa[full]; });
  return std::make_shared<ReduceSumAxesNode>(std::move(out), std::vector<NodePtr>{a},
                                             std::move(axes));
}

NodePtr expand_scalar(const NodePtr& a, std::vector<int64_t> shape) {
  if (a->value.numel() != 1)
    throw ShapeError("expand_scalar: expected one element, got " + a->value.shape_str());
  Tensor out = Tensor::full(std::move(shape), a->value.item());
  return std::make_shared<ExpandScalarNode>(std::move(out), std::vector<NodePtr>{a});
}

NodePtr expand(const NodePtr& a, std::vector<int64_t> shape) {
  const Tensor& v = a->value;
  if (v.rank() != shape.size())
    throw ShapeError("expand: rank mismatch between " + v.shape_str() + " and " +
                     pairsynth::shape_str(shape));
  std::vector<int> bcast;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (v.shape()[i] == shape[i]) continue;
    if (v.shape()[i] != 1)
      throw ShapeError("expand: cannot broadcast " + v.shape_str() + " to " +
                       pairsynth::shape_str(shape));
    bcast.push_back(static_cast<int>(i));
  }
  Tensor out(shape);
  double* po = out.data();
  const double* pa = v.data();
  for_each_broadcast(shape, v.shape(), [&](int64_t full, int64_t small) { po[full] = pa[small]; });
  return std::make_shared<ExpandNode>(std::move(out), std::vector<NodePtr>{a}, std::move(bcast));
}

NodePtr concat_ch(const NodePtr& a, const NodePtr& b) {
  const Tensor& va = a->value;
  const Tensor& vb = b->value;
  if (va.rank() != 4 || vb.rank() != 4 || va.dim(0) != vb.dim(0) || va.dim(2) != vb.dim(2) ||
      va.dim(3) != vb.dim(3))
    throw ShapeError("concat_ch: incompatible shapes " + va.shape_str() + " and " + vb.shape_str());
  int64_t n = va.dim(0), ca = va.dim(1), cb = vb.dim(1), hw = va.dim(2) * va.dim(3);
  Tensor out({n, ca + cb, va.dim(2), va.dim(3)});
  double* po = out.data();
  const double* pa = va.data();
  const double* pb = vb.data();
  for (int64_t in = 0; in < n; ++in) {
    std::copy(pa + in * ca * hw, pa + (in + 1) * ca * hw, po + in * (ca + cb) * hw);
    std::copy(pb + in * cb * hw, pb + (in + 1) * cb * hw, po + in * (ca + cb) * hw + ca * hw);
  }
  return std::make_shared<ConcatChNode>(std::move(out), std::vector<NodePtr>{a, b});
}

NodePtr slice_ch(const NodePtr& a, int64_t c0, int64_t c1) {
  const Tensor& v = a->value;
  if (v.rank() != 4 || c0 < 0 || c1 > v.dim(1) || c0 >= c1)
    throw ShapeError("slice_ch: bad channel range on " + v.shape_str());
  int64_t n = v.dim(0), c = v.dim(1), hw = v.dim(2) * v.dim(3);
  Tensor out({n, c1 - c0, v.dim(2), v.dim(3)});
  double* po = out.data();
  const double* pa = v.data();
  for (int64_t in = 0; in < n; ++in)
    std::copy(pa + (in * c + c0) * hw, pa + (in * c + c1) * hw, po + in * (c1 - c0) * hw);
  return std::make_shared<SliceChNode>(std::move(out), std::vector<NodePtr>{a}, c0, c1);
}

// ---- composites ----

NodePtr relu(const NodePtr& a) {
  Tensor mask(a->value.shape());
  const double* pa = a->value.data();
  double* pm = mask.data();
  for (int64_t i = 0; i < mask.numel(); ++i) pm[i] = pa[i] > 0.0 ? 1.0 : 0.0;
  return mul(a, constant(std::move(mask)));
}

NodePtr leaky_relu(const NodePtr& a, double slope) {
  Tensor mask(a->value.shape());
  const double* pa = a->value.data();
  double* pm = mask.data();
  for (int64_t i = 0; i < mask.numel(); ++i) pm[i] = pa[i] > 0.0 ? 1.0 : slope;
  return mul(a, constant(std::move(mask)));
}

NodePtr abs(const NodePtr& a) {
  Tensor sign(a->value.shape());
  const double* pa = a->value.data();
  double* ps = sign.data();
  for (int64_t i = 0; i < sign.numel(); ++i) ps[i] = pa[i] < 0.0 ? -1.0 : 1.0;
  return mul(a, constant(std::move(sign)));
}

NodePtr square(const NodePtr& a) { return mul(a, a); }

NodePtr mean_all(const NodePtr& a) {
  return scalar_mul(reduce_sum_all(a), 1.0 / static_cast<double>(a->value.numel()));
}

NodePtr softplus(const NodePtr& a) {
  return add(relu(a), log(scalar_add(exp(neg(abs(a))), 1.0)));
}

NodePtr log_softmax_rows(const NodePtr& a) {
  const Tensor& v = a->value;
  if (v.rank() != 2) throw ShapeError("log_softmax_rows: expected (n, k), got " + v.shape_str());
  int64_t n = v.dim(0), k = v.dim(1);
  Tensor onehot({n, k});
  const double* pa = v.data();
  double* ph = onehot.data();
  for (int64_t i = 0; i < n; ++i) {
    int64_t arg = 0;
    for (int64_t j = 1; j < k; ++j)
      if (pa[i * k + j] > pa[i * k + arg]) arg = j;
    ph[i * k + arg] = 1.0;
  }
  NodePtr mx = reduce_sum_axes(mul(a, constant(std::move(onehot))), {1});  // (n, 1) row max
  NodePtr shifted = sub(a, expand(mx, {n, k}));
  NodePtr lse = add(mx, log(reduce_sum_axes(exp(shifted), {1})));
  return sub(a, expand(lse, {n, k}));
}

NodePtr cross_entropy(const NodePtr& logits, const std::vector<int>& labels) {
  const Tensor& v = logits->value;
  int64_t n = v.dim(0), k = v.dim(1);
  if (static_cast<int64_t>(labels.size()) != n)
    throw ShapeError("cross_entropy: label count does not match batch");
  Tensor onehot({n, k});
  double* ph = onehot.data();
  for (int64_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= k) throw ShapeError("cross_entropy: label out of range");
    ph[i * k + labels[i]] = 1.0;
  }
  NodePtr picked = reduce_sum_axes(mul(log_softmax_rows(logits), constant(std::move(onehot))), {1});
  return neg(mean_all(picked));
}

NodePtr instance_norm(const NodePtr& x, const NodePtr& gamma, const NodePtr& beta, double eps) {
  const Tensor& v = x->value;
  if (v.rank() != 4) throw ShapeError("instance_norm: expected NCHW, got " + v.shape_str());
  int64_t c = v.dim(1);
  double inv_hw = 1.0 / static_cast<double>(v.dim(2) * v.dim(3));
  NodePtr mu = scalar_mul(reduce_sum_axes(x, {2, 3}), inv_hw);
  NodePtr xc = sub(x, expand(mu, v.shape()));
  NodePtr var = scalar_mul(reduce_sum_axes(mul(xc, xc), {2, 3}), inv_hw);
  NodePtr y = div(xc, expand(sqrt(scalar_add(var, eps)), v.shape()));
  NodePtr g4 = expand(reshape(gamma, {1, c, 1, 1}), v.shape());
  NodePtr b4 = expand(reshape(beta, {1, c, 1, 1}), v.shape());
  return add(mul(y, g4), b4);
}

// ---- engine ----

std::vector<NodePtr> grad(const NodePtr& output, const std::vector<NodePtr>& wrt,
                          bool create_graph) {
  if (output->value.numel() != 1)
    throw ShapeError("grad: output must be scalar, got " + output->value.shape_str());

  // Topological order over the requires_grad subgraph.
  std::vector<NodePtr> order;
  std::unordered_set<Node*> done;
  std::vector<std::pair<NodePtr, size_t>> stack;
  if (output->requires_grad) stack.push_back({output, 0});
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next == 0) {
      if (done.count(node.get())) {
        stack.pop_back();
        continue;
      }
    }
    bool descended = false;
    while (next < node->inputs.size()) {
      const NodePtr& in = node->inputs[next++];
      if (in && in->requires_grad && !done.count(in.get())) {
        stack.push_back({in, 0});
        descended = true;
        break;
      }
    }
    if (!descended && next >= node->inputs.size()) {
      if (!done.count(node.get())) {
        done.insert(node.get());
        order.push_back(node);
      }
      stack.pop_back();
    }
  }

  std::unordered_map<Node*, NodePtr> gmap;
  if (output->requires_grad) gmap[output.get()] = constant(Tensor::scalar(1.0));

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodePtr& node = *it;
    auto gi = gmap.find(node.get());
    if (gi == gmap.end() || node->inputs.empty()) continue;
    if (create_graph && !node->differentiable_twice())
      throw Error(ExitCode::config, std::string("op '") + node->op_name() +
                                        "' does not support higher-order differentiation");
    std::vector<NodePtr> gins;
    node->backward(node, gi->second, gins);
    for (size_t i = 0; i < node->inputs.size(); ++i) {
      const NodePtr& in = node->inputs[i];
      if (!in || !in->requires_grad || !gins[i]) continue;
      NodePtr contrib = create_graph ? gins[i] : detach(gins[i]);
      auto acc = gmap.find(in.get());
      if (acc == gmap.end())
        gmap[in.get()] = contrib;
      else
        acc->second = create_graph ? add(acc->second, contrib)
                                   : detach(add(acc->second, contrib));
    }
  }

  std::vector<NodePtr> result;
  result.reserve(wrt.size());
  for (const NodePtr& w : wrt) {
    auto gi = gmap.find(w.get());
    if (gi != gmap.end())
      result.push_back(gi->second);
    else
      result.push_back(constant(Tensor::zeros(w->value.shape())));
  }
  return result;
}

}  // namespace pairsynth::ad
