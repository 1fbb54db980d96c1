#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pairsynth/rng.hpp"
#include "pairsynth/tensor.hpp"

namespace pairsynth {

enum class Cls { noncs = 0, cs = 1 };

// Procedural paired two-modality dataset. Modality A is a smooth elliptical
// "gland" on a noisy background; the target class adds one dark lesion blob
// strictly inside the gland. Modality B is a fixed deterministic transform of
// A (edge enhancement plus masked sinusoidal texture), so the correctness of
// a generated pairing is measurable as reconstruction error against that
// transform.
struct PhantomSpec {
  int image_side = 64;
  int train_cs = 483;
  int train_noncs = 1942;
  int test_cs = 50;
  int test_noncs = 50;
  double scale = 1.0;  // multiplies every count (rounded, floor 1)

  double lesion_r_min = 2.5, lesion_r_max = 5.0;    // lesion radius, pixels
  double depress_min = 0.15, depress_max = 0.45;    // lesion intensity depression
  double ecc_min = 0.7, ecc_max = 1.0;              // gland minor/major axis ratio
  double tex_freq = 8.0;                            // texture cycles per image width
  uint64_t seed = 1234;

  void validate() const;
  int count(bool train_split, Cls cls) const;  // scaled
};

struct PhantomMeta {
  double gland_x = 0, gland_y = 0, gland_rx = 0, gland_ry = 0, gland_theta = 0, gland_level = 0;
  bool has_lesion = false;
  double lesion_x = 0, lesion_y = 0, lesion_r = 0, lesion_depth = 0;
};

struct PairRecord {
  int64_t id = 0;
  Cls cls = Cls::noncs;
  Tensor a, b;       // (1, s, s) each, values in [-1, 1]
  PhantomMeta meta;  // generation-time ground truth; not serialized
};

struct PhantomDataset {
  PhantomSpec spec;
  std::vector<PairRecord> train, test;

  const PairRecord* find(int64_t id) const;
  std::vector<const PairRecord*> pool(bool train_split, Cls cls) const;
};

// Deterministic in (spec.seed, id): the same id always yields the same pair.
PairRecord generate_pair(const PhantomSpec& spec, int64_t id, Cls cls);
PhantomDataset generate_dataset(const PhantomSpec& spec);

// The fixed pairing transform f. Accepts (1, s, s) or (n, 1, s, s). The
// texture frequency is part of f; it defaults to the stock transform and must
// match the generating spec when measuring pairing on a custom dataset.
constexpr double kTexFreqDefault = 8.0;
Tensor pairing_transform(const Tensor& a, double tex_freq = kTexFreqDefault);
// Mean squared deviation of b_hat from f(a_hat); the pairing-correctness proxy.
double pairing_error(const Tensor& a_hat, const Tensor& b_hat,
                     double tex_freq = kTexFreqDefault);
// Reference error of mismatched pairs: b_hat rows re-paired by a random
// fixed-point-free permutation.
double pairing_baseline(const Tensor& a_hat, const Tensor& b_hat, Rng& rng,
                        double tex_freq = kTexFreqDefault);

// Image-derived labels (no generator metadata needed, so they also work on
// loaded datasets and on synthetic images).
struct Point {
  double y = 0, x = 0;
};
Point gland_centroid(const Tensor& img);                 // (1, s, s)
std::optional<Point> lesion_centroid(const Tensor& img); // none when no blob found
// 0 = no lesion; 1..4 = lesion quadrant relative to the gland centroid
// (1 top-right, 2 top-left, 3 bottom-left, 4 bottom-right).
int class_label(const Tensor& img);
constexpr int kClassCount = 5;

// Directory layout: manifest.tsv plus one raw tensor file per image
// (magic "PHT1", u32 rank, u32 dims, little-endian f32 payload).
void save_dataset(const PhantomDataset& ds, const std::string& dir, bool previews = false);
PhantomDataset load_dataset(const std::string& dir);

// Stacks records into batch tensors.
Tensor stack_a(const std::vector<const PairRecord*>& recs);
Tensor stack_b(const std::vector<const PairRecord*>& recs);

}  // namespace pairsynth
