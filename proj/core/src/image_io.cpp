#include "pairsynth/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>

#include "pairsynth/errors.hpp"

namespace pairsynth {

namespace {

void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& data) {
  put_u32_be(out, static_cast<uint32_t>(data.size()));
  size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  uint32_t crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32_be(out, crc);
}

}  // namespace

void write_png_gray8(const std::string& path, int64_t width, int64_t height,
                     const std::vector<uint8_t>& pixels) {
  if (static_cast<int64_t>(pixels.size()) != width * height)
    throw Error(ExitCode::failure, "png: pixel buffer does not match dimensions");

  // Raw scanlines with filter byte 0.
  std::vector<uint8_t> raw;
  raw.reserve((width + 1) * height);
  for (int64_t y = 0; y < height; ++y) {
    raw.push_back(0);
    raw.insert(raw.end(), pixels.begin() + y * width, pixels.begin() + (y + 1) * width);
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw Error(ExitCode::failure, "png: zlib compression failed");
  compressed.resize(bound);

  std::vector<uint8_t> out;
  const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  out.insert(out.end(), sig, sig + 8);
  std::vector<uint8_t> ihdr;
  put_u32_be(ihdr, static_cast<uint32_t>(width));
  put_u32_be(ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // grayscale
  ihdr.push_back(0);  // deflate
  ihdr.push_back(0);  // filter method
  ihdr.push_back(0);  // no interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", compressed);
  put_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ExitCode::failure, "cannot write " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

GridImage make_grid(const Tensor& images, int64_t cols, int64_t gap) {
  if (images.rank() != 4 || images.dim(1) != 1)
    throw ShapeError("make_grid: expected (n, 1, s, s), got " + images.shape_str());
  int64_t n = images.dim(0), s = images.dim(2);
  cols = std::max<int64_t>(1, std::min(cols, n));
  int64_t rows = (n + cols - 1) / cols;
  GridImage grid;
  grid.width = cols * s + (cols + 1) * gap;
  grid.height = rows * s + (rows + 1) * gap;
  grid.pixels.assign(grid.width * grid.height, 32);
  const double* p = images.data();
  for (int64_t i = 0; i < n; ++i) {
    int64_t r = i / cols, c = i % cols;
    int64_t y0 = gap + r * (s + gap), x0 = gap + c * (s + gap);
    for (int64_t y = 0; y < s; ++y)
      for (int64_t x = 0; x < s; ++x) {
        double v = p[(i * s + y) * s + x];
        v = std::clamp((v + 1.0) * 0.5, 0.0, 1.0);
        grid.pixels[(y0 + y) * grid.width + (x0 + x)] = static_cast<uint8_t>(v * 255.0 + 0.5);
      }
  }
  return grid;
}

void save_image_grid(const std::string& path, const Tensor& images, int64_t cols) {
  GridImage g = make_grid(images, cols);
  write_png_gray8(path, g.width, g.height, g.pixels);
}

}  // namespace pairsynth
