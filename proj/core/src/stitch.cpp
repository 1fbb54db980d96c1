#include "pairsynth/stitch.hpp"

#include <cstdio>

#include "pairsynth/errors.hpp"

namespace pairsynth {

void StitchConfig::validate() const {
  if (f < 1 || a < 1)
    throw ConfigError("stitch config requires f >= 1 and a >= 1, got f=" + std::to_string(f) +
                      " a=" + std::to_string(a));
}

std::string StitchConfig::name() const {
  return std::to_string(f) + "F" + std::to_string(a) + "a";
}

StitchConfig StitchConfig::parse(const std::string& name) {
  int f = 0, a = 0;
  char tail = 0;
  if (std::sscanf(name.c_str(), "%dF%d%c", &f, &a, &tail) != 3 || tail != 'a' || f < 1 || a < 1)
    throw ConfigError("cannot parse stitch config '" + name + "' (expected e.g. 2F32a)");
  return StitchConfig{f, a};
}

Tensor stitch_tensor(const Tensor& subs, int f) {
  if (subs.rank() != 4 || subs.dim(1) != static_cast<int64_t>(f) * f || subs.dim(2) != subs.dim(3))
    throw ShapeError("stitch: sub-image batch " + subs.shape_str() + " does not match f=" +
                     std::to_string(f) + " (expected (n, " + std::to_string(f * f) + ", a, a))");
  const int64_t n = subs.dim(0), a = subs.dim(2), side = f * a;
  Tensor out({n, 1, side, side});
  const double* ps = subs.data();
  double* po = out.data();
  for (int64_t in = 0; in < n; ++in) {
    const double* sn = ps + in * f * f * a * a;
    double* on = po + in * side * side;
    for (int r = 0; r < f; ++r)
      for (int c = 0; c < f; ++c) {
        const double* sk = sn + (static_cast<int64_t>(r) * f + c) * a * a;
        for (int64_t i = 0; i < a; ++i) {
          double* orow = on + (f * i + r) * side + c;
          for (int64_t j = 0; j < a; ++j) orow[f * j] = sk[i * a + j];
        }
      }
  }
  return out;
}

Tensor unstitch_tensor(const Tensor& img, int f) {
  if (img.rank() != 4 || img.dim(1) != 1 || img.dim(2) != img.dim(3))
    throw ShapeError("unstitch: expected single-channel square images, got " + img.shape_str());
  const int64_t side = img.dim(2);
  if (side % f != 0)
    throw ShapeError("unstitch: image side of " + img.shape_str() + " is not divisible by f=" +
                     std::to_string(f));
  const int64_t n = img.dim(0), a = side / f;
  Tensor out({n, static_cast<int64_t>(f) * f, a, a});
  const double* pi = img.data();
  double* po = out.data();
  for (int64_t in = 0; in < n; ++in) {
    const double* im = pi + in * side * side;
    double* sn = po + in * f * f * a * a;
    for (int r = 0; r < f; ++r)
      for (int c = 0; c < f; ++c) {
        double* sk = sn + (static_cast<int64_t>(r) * f + c) * a * a;
        for (int64_t i = 0; i < a; ++i) {
          const double* irow = im + (f * i + r) * side + c;
          for (int64_t j = 0; j < a; ++j) sk[i * a + j] = irow[f * j];
        }
      }
  }
  return out;
}

Tensor stitch_batch(const Tensor& subs, const StitchConfig& cfg) {
  cfg.validate();
  if (subs.rank() != 4 || subs.dim(1) != cfg.sub_count() || subs.dim(2) != cfg.a ||
      subs.dim(3) != cfg.a)
    throw ShapeError("stitch: sub-image batch " + subs.shape_str() + " does not match config " +
                     cfg.name() + " (expected (n, " + std::to_string(cfg.sub_count()) + ", " +
                     std::to_string(cfg.a) + ", " + std::to_string(cfg.a) + "))");
  return stitch_tensor(subs, cfg.f);
}

Tensor unstitch_batch(const Tensor& img, const StitchConfig& cfg) {
  cfg.validate();
  if (img.rank() != 4 || img.dim(1) != 1 || img.dim(2) != cfg.out_side() ||
      img.dim(3) != cfg.out_side())
    throw ShapeError("unstitch: image batch " + img.shape_str() + " does not match config " +
                     cfg.name() + " (expected (n, 1, " + std::to_string(cfg.out_side()) + ", " +
                     std::to_string(cfg.out_side()) + "))");
  return unstitch_tensor(img, cfg.f);
}

namespace ad {

namespace {

struct StitchNode : Node {
  int f;
  StitchNode(Tensor v, std::vector<NodePtr> ins, int f_) : Node(std::move(v), std::move(ins)), f(f_) {}
  const char* op_name() const override { return "stitch"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {unstitch(g, f)};
  }
};

struct UnstitchNode : Node {
  int f;
  UnstitchNode(Tensor v, std::vector<NodePtr> ins, int f_) : Node(std::move(v), std::move(ins)), f(f_) {}
  const char* op_name() const override { return "unstitch"; }
  void backward(const NodePtr&, const NodePtr& g, std::vector<NodePtr>& gs) const override {
    gs = {stitch(g, f)};
  }
};

}  // namespace

NodePtr stitch(const NodePtr& subs, int f) {
  return std::make_shared<StitchNode>(stitch_tensor(subs->value, f), std::vector<NodePtr>{subs}, f);
}

NodePtr unstitch(const NodePtr& img, int f) {
  return std::make_shared<UnstitchNode>(unstitch_tensor(img->value, f), std::vector<NodePtr>{img},
                                        f);
}

}  // namespace ad

}  // namespace pairsynth
