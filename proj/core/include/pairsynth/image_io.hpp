#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairsynth/tensor.hpp"

namespace pairsynth {

// Minimal 8-bit grayscale PNG writer (zlib-backed).
void write_png_gray8(const std::string& path, int64_t width, int64_t height,
                     const std::vector<uint8_t>& pixels);

// Tiles an (n, 1, s, s) batch of [-1, 1] images into a grid with separators.
struct GridImage {
  int64_t width = 0, height = 0;
  std::vector<uint8_t> pixels;
};
GridImage make_grid(const Tensor& images, int64_t cols, int64_t gap = 2);

void save_image_grid(const std::string& path, const Tensor& images, int64_t cols);

}  // namespace pairsynth
