#pragma once

#include <cstdint>
#include <string>

#include "pairsynth/autodiff.hpp"
#include "pairsynth/tensor.hpp"

namespace pairsynth {

// Decomposition of an out_side x out_side image into f*f sub-images of side a.
// The stitched image consists of a*a non-overlapping f x f superpixel blocks;
// block (i, j) holds pixel (i, j) of every sub-image, filled row-major: entry
// (r, c) of a block comes from sub-image r*f + c. All indices 0-based here;
// written out, stitched(f*i + r, f*j + c) = sub[r*f + c](i, j).
struct StitchConfig {
  int f = 2;   // block side; f*f sub-images
  int a = 32;  // sub-image side

  int out_side() const { return f * a; }
  int sub_count() const { return f * f; }

  void validate() const;  // throws ConfigError for non-positive f or a

  // "2F32a" style name used by the sweep CLI.
  std::string name() const;
  static StitchConfig parse(const std::string& name);
};

// Interlaces (n, f*f, a, a) sub-images into (n, 1, f*a, f*a) images.
// Pure element permutation: bijective, linear, norm-preserving.
Tensor stitch_batch(const Tensor& subs, const StitchConfig& cfg);

// Exact inverse of stitch_batch: (n, 1, f*a, f*a) -> (n, f*f, a, a).
Tensor unstitch_batch(const Tensor& img, const StitchConfig& cfg);

// Shape-only variants used by the autodiff nodes (f alone determines the map).
Tensor stitch_tensor(const Tensor& subs, int f);
Tensor unstitch_tensor(const Tensor& img, int f);

}  // namespace pairsynth
