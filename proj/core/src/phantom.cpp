#include "pairsynth/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pairsynth/errors.hpp"
#include "pairsynth/image_io.hpp"

namespace fs = std::filesystem;

namespace pairsynth {

namespace {

constexpr double kBackground = -0.85;
constexpr double kNoiseRms = 0.02;
constexpr double kGlandRxMinFrac = 0.28, kGlandRxMaxFrac = 0.36;
constexpr double kGlandLevelMin = 0.15, kGlandLevelMax = 0.55;
constexpr double kLesionFracMin = 0.25, kLesionFracMax = 0.55;
constexpr double kGlandMaskThreshold = -0.35;
constexpr double kLesionDetectThreshold = 0.08;

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double smootherstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (t * (t * 6.0 - 15.0) + 10.0);
}

// 5x5 box blur with clamped borders, applied twice, rescaled to a fixed RMS.
std::vector<double> smooth_noise(Rng& rng, int s) {
  std::vector<double> field(s * s), tmp(s * s);
  for (double& v : field) v = rng.uniform(-1.0, 1.0);
  for (int pass = 0; pass < 2; ++pass) {
    for (int y = 0; y < s; ++y)
      for (int x = 0; x < s; ++x) {
        double acc = 0;
        for (int dy = -2; dy <= 2; ++dy)
          for (int dx = -2; dx <= 2; ++dx) {
            int yy = std::clamp(y + dy, 0, s - 1);
            int xx = std::clamp(x + dx, 0, s - 1);
            acc += field[yy * s + xx];
          }
        tmp[y * s + x] = acc / 25.0;
      }
    field.swap(tmp);
  }
  double rms = 0;
  for (double v : field) rms += v * v;
  rms = std::sqrt(rms / (s * s));
  double gain = rms > 0 ? kNoiseRms / rms : 0.0;
  for (double& v : field) v *= gain;
  return field;
}

}  // namespace

void PhantomSpec::validate() const {
  if (image_side < 16 || image_side % 2 != 0)
    throw ConfigError("phantom: image side must be an even number >= 16");
  if (train_cs < 1 || train_noncs < 1 || test_cs < 1 || test_noncs < 1)
    throw ConfigError("phantom: all split counts must be >= 1");
  if (scale <= 0.0) throw ConfigError("phantom: scale must be positive");
  if (lesion_r_min <= 0 || lesion_r_max < lesion_r_min)
    throw ConfigError("phantom: bad lesion radius range");
  if (depress_min <= 0 || depress_max < depress_min || depress_max > 1.0)
    throw ConfigError("phantom: bad lesion depression range");
  if (ecc_min <= 0 || ecc_max < ecc_min || ecc_max > 1.0)
    throw ConfigError("phantom: bad gland eccentricity range");
  if (tex_freq < 2.0 || tex_freq > 16.0)
    throw ConfigError("phantom: texture frequency must lie in [2, 16] cycles per image");
  // The lesion must fit strictly inside the smallest possible gland.
  double min_axis = kGlandRxMinFrac * image_side * ecc_min;
  if (kLesionFracMax * min_axis + lesion_r_max > 0.95 * min_axis)
    throw ConfigError("phantom: lesion radius range cannot keep lesions inside the gland "
                      "(max radius " + std::to_string(lesion_r_max) + " too large for min gland axis " +
                      std::to_string(min_axis) + ")");
}

int PhantomSpec::count(bool train_split, Cls cls) const {
  int base = train_split ? (cls == Cls::cs ? train_cs : train_noncs)
                         : (cls == Cls::cs ? test_cs : test_noncs);
  return std::max(1, static_cast<int>(std::lround(base * scale)));
}

PairRecord generate_pair(const PhantomSpec& spec, int64_t id, Cls cls) {
  spec.validate();
  Rng rng(splitmix64(spec.seed ^ splitmix64(static_cast<uint64_t>(id) + 1)));
  const int s = spec.image_side;

  PairRecord rec;
  rec.id = id;
  rec.cls = cls;

  PhantomMeta& m = rec.meta;
  m.gland_x = s / 2.0 + rng.uniform(-5.0, 5.0);
  m.gland_y = s / 2.0 + rng.uniform(-5.0, 5.0);
  m.gland_rx = rng.uniform(kGlandRxMinFrac, kGlandRxMaxFrac) * s;
  m.gland_ry = m.gland_rx * rng.uniform(spec.ecc_min, spec.ecc_max);
  m.gland_theta = rng.uniform(0.0, M_PI);
  m.gland_level = rng.uniform(kGlandLevelMin, kGlandLevelMax);

  std::vector<double> noise = smooth_noise(rng, s);

  if (cls == Cls::cs) {
    m.has_lesion = true;
    double min_axis = std::min(m.gland_rx, m.gland_ry);
    // Redraw until the lesion sits strictly inside the gland with an
    // unambiguous quadrant (>= 1.5 px off both centroid axes).
    for (int attempt = 0;; ++attempt) {
      double phi = rng.uniform(0.0, 2.0 * M_PI);
      double frac = rng.uniform(kLesionFracMin, kLesionFracMax);
      double r = rng.uniform(spec.lesion_r_min, spec.lesion_r_max);
      double ux = frac * m.gland_rx * std::cos(phi);
      double uy = frac * m.gland_ry * std::sin(phi);
      double ct = std::cos(m.gland_theta), st = std::sin(m.gland_theta);
      double dx = ct * ux - st * uy;
      double dy = st * ux + ct * uy;
      // Normalized gland radius at the lesion's far edge.
      double rho = frac + r / min_axis;
      if ((rho <= 0.92 && std::abs(dx) >= 1.5 && std::abs(dy) >= 1.5) || attempt > 200) {
        m.lesion_x = m.gland_x + dx;
        m.lesion_y = m.gland_y + dy;
        m.lesion_r = r;
        break;
      }
    }
    m.lesion_depth = rng.uniform(spec.depress_min, spec.depress_max);
  }

  Tensor a({1, s, s});
  double* pa = a.data();
  const double ct = std::cos(m.gland_theta), st = std::sin(m.gland_theta);
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      double px = x - m.gland_x, py = y - m.gland_y;
      double u = ct * px + st * py;
      double v = -st * px + ct * py;
      double rho = std::sqrt((u / m.gland_rx) * (u / m.gland_rx) +
                             (v / m.gland_ry) * (v / m.gland_ry));
      double profile = smootherstep((1.0 - rho) / 0.12);
      double val = kBackground + (m.gland_level - kBackground) * profile * (1.0 - 0.10 * rho * rho);
      if (m.has_lesion) {
        double lx = x - m.lesion_x, ly = y - m.lesion_y;
        double lrho = std::sqrt(lx * lx + ly * ly) / m.lesion_r;
        val -= m.lesion_depth * smootherstep((1.0 - lrho) / 0.35) * profile;
      }
      pa[y * s + x] = std::clamp(val + noise[y * s + x], -1.0, 1.0);
    }
  }
  rec.a = std::move(a);
  rec.b = pairing_transform(rec.a, spec.tex_freq);
  return rec;
}

PhantomDataset generate_dataset(const PhantomSpec& spec) {
  spec.validate();
  PhantomDataset ds;
  ds.spec = spec;
  int64_t id = 0;
  auto emit = [&](bool train_split, Cls cls) {
    int n = spec.count(train_split, cls);
    auto& out = train_split ? ds.train : ds.test;
    for (int i = 0; i < n; ++i) out.push_back(generate_pair(spec, id++, cls));
  };
  emit(true, Cls::cs);
  emit(true, Cls::noncs);
  emit(false, Cls::cs);
  emit(false, Cls::noncs);
  return ds;
}

const PairRecord* PhantomDataset::find(int64_t id) const {
  for (const auto& r : train)
    if (r.id == id) return &r;
  for (const auto& r : test)
    if (r.id == id) return &r;
  return nullptr;
}

std::vector<const PairRecord*> PhantomDataset::pool(bool train_split, Cls cls) const {
  std::vector<const PairRecord*> out;
  for (const auto& r : (train_split ? train : test))
    if (r.cls == cls) out.push_back(&r);
  return out;
}

namespace {

// f on one (s, s) plane.
void transform_plane(const double* a, double* b, int s, double tex_freq) {
  auto at = [&](int y, int x) {
    return a[std::clamp(y, 0, s - 1) * s + std::clamp(x, 0, s - 1)];
  };
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      double gx = (at(y - 1, x + 1) + 2 * at(y, x + 1) + at(y + 1, x + 1)) -
                  (at(y - 1, x - 1) + 2 * at(y, x - 1) + at(y + 1, x - 1));
      double gy = (at(y + 1, x - 1) + 2 * at(y + 1, x) + at(y + 1, x + 1)) -
                  (at(y - 1, x - 1) + 2 * at(y - 1, x) + at(y - 1, x + 1));
      double mag = std::sqrt(gx * gx + gy * gy) / 4.0;
      double window = 1.0 / (1.0 + std::exp(-(at(y, x) + 0.25) / 0.1));
      double tex = std::sin(2.0 * M_PI * tex_freq * x / s);
      b[y * s + x] = std::clamp(0.6 * at(y, x) + 0.4 * mag + 0.15 * tex * window, -1.0, 1.0);
    }
  }
}

}  // namespace

Tensor pairing_transform(const Tensor& a, double tex_freq) {
  if (a.rank() == 3 && a.dim(0) == 1 && a.dim(1) == a.dim(2)) {
    int s = static_cast<int>(a.dim(1));
    Tensor b({1, a.dim(1), a.dim(2)});
    transform_plane(a.data(), b.data(), s, tex_freq);
    return b;
  }
  if (a.rank() == 4 && a.dim(1) == 1 && a.dim(2) == a.dim(3)) {
    int s = static_cast<int>(a.dim(2));
    Tensor b(a.shape());
    for (int64_t i = 0; i < a.dim(0); ++i)
      transform_plane(a.data() + i * s * s, b.data() + i * s * s, s, tex_freq);
    return b;
  }
  throw ShapeError("pairing_transform: expected (1, s, s) or (n, 1, s, s), got " + a.shape_str());
}

double pairing_error(const Tensor& a_hat, const Tensor& b_hat, double tex_freq) {
  check_same_shape(a_hat, b_hat, "pairing_error");
  Tensor fb = pairing_transform(a_hat, tex_freq);
  const double* pf = fb.data();
  const double* pb = b_hat.data();
  double acc = 0;
  for (int64_t i = 0; i < fb.numel(); ++i) {
    double d = pb[i] - pf[i];
    acc += d * d;
  }
  return acc / static_cast<double>(fb.numel());
}

double pairing_baseline(const Tensor& a_hat, const Tensor& b_hat, Rng& rng, double tex_freq) {
  if (a_hat.rank() != 4 || a_hat.dim(0) < 2)
    throw ShapeError("pairing_baseline: need a batch of at least 2, got " + a_hat.shape_str());
  int64_t n = a_hat.dim(0);
  int64_t per = a_hat.numel() / n;
  // Fixed-point-free re-pairing via a random cyclic shift.
  int64_t shift = 1 + rng.index(n - 1);
  Tensor b_shuf(b_hat.shape());
  for (int64_t i = 0; i < n; ++i)
    std::copy(b_hat.data() + ((i + shift) % n) * per, b_hat.data() + ((i + shift) % n + 1) * per,
              b_shuf.data() + i * per);
  return pairing_error(a_hat, b_shuf, tex_freq);
}

Point gland_centroid(const Tensor& img) {
  int s = static_cast<int>(img.dim(img.rank() - 1));
  const double* p = img.data();
  double cy = 0, cx = 0, w = 0;
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x)
      if (p[y * s + x] > kGlandMaskThreshold) {
        cy += y;
        cx += x;
        w += 1;
      }
  if (w == 0) return {s / 2.0, s / 2.0};
  return {cy / w, cx / w};
}

std::optional<Point> lesion_centroid(const Tensor& img) {
  int s = static_cast<int>(img.dim(img.rank() - 1));
  const double* p = img.data();
  std::vector<double> vals;
  vals.reserve(s * s);
  for (int i = 0; i < s * s; ++i)
    if (p[i] > kGlandMaskThreshold) vals.push_back(p[i]);
  if (vals.size() < 16) return std::nullopt;
  std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
  double med = vals[vals.size() / 2];

  std::vector<double> depress(s * s, 0.0), tmp(s * s);
  for (int i = 0; i < s * s; ++i)
    if (p[i] > kGlandMaskThreshold) depress[i] = std::max(0.0, med - p[i]);
  for (int pass = 0; pass < 2; ++pass) {
    for (int y = 0; y < s; ++y)
      for (int x = 0; x < s; ++x) {
        double acc = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            int yy = std::clamp(y + dy, 0, s - 1);
            int xx = std::clamp(x + dx, 0, s - 1);
            acc += depress[yy * s + xx];
          }
        tmp[y * s + x] = acc / 9.0;
      }
    depress.swap(tmp);
  }
  double dmax = *std::max_element(depress.begin(), depress.end());
  if (dmax < kLesionDetectThreshold) return std::nullopt;
  double cy = 0, cx = 0, w = 0;
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x) {
      double d = depress[y * s + x];
      if (d >= 0.5 * dmax) {
        cy += y * d;
        cx += x * d;
        w += d;
      }
    }
  return Point{cy / w, cx / w};
}

int class_label(const Tensor& img) {
  auto lesion = lesion_centroid(img);
  if (!lesion) return 0;
  Point g = gland_centroid(img);
  double dx = lesion->x - g.x;
  double dy = lesion->y - g.y;
  if (dy < 0) return dx > 0 ? 1 : 2;
  return dx > 0 ? 4 : 3;
}

// ---- serialization ----

namespace {

constexpr char kManifestHeader[] = "#pairsynth-phantom-dataset v1";

void write_pht(const std::string& path, const Tensor& t) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DatasetError("cannot write tensor file " + path);
  f.write("PHT1", 4);
  uint32_t rank = static_cast<uint32_t>(t.rank());
  f.write(reinterpret_cast<const char*>(&rank), 4);
  for (size_t i = 0; i < t.rank(); ++i) {
    uint32_t d = static_cast<uint32_t>(t.dim(i));
    f.write(reinterpret_cast<const char*>(&d), 4);
  }
  std::vector<float> payload(t.numel());
  for (int64_t i = 0; i < t.numel(); ++i) payload[i] = static_cast<float>(t[i]);
  f.write(reinterpret_cast<const char*>(payload.data()),
          static_cast<std::streamsize>(payload.size() * sizeof(float)));
}

Tensor read_pht(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DatasetError("missing tensor file " + path);
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, "PHT1", 4) != 0)
    throw DatasetError("corrupt tensor file " + path + " (bad magic)");
  uint32_t rank = 0;
  if (!f.read(reinterpret_cast<char*>(&rank), 4) || rank == 0 || rank > 8)
    throw DatasetError("corrupt tensor file " + path + " (bad rank)");
  std::vector<int64_t> shape(rank);
  for (uint32_t i = 0; i < rank; ++i) {
    uint32_t d = 0;
    if (!f.read(reinterpret_cast<char*>(&d), 4))
      throw DatasetError("truncated tensor file " + path);
    shape[i] = d;
  }
  Tensor t(shape);
  std::vector<float> payload(t.numel());
  if (!f.read(reinterpret_cast<char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float))))
    throw DatasetError("truncated tensor file " + path);
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = payload[i];
  return t;
}

std::string image_name(int64_t id, char mod) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "p%06lld_%c.pht", static_cast<long long>(id), mod);
  return std::string("images/") + buf;
}

}  // namespace

void save_dataset(const PhantomDataset& ds, const std::string& dir, bool previews) {
  fs::create_directories(fs::path(dir) / "images");
  std::ofstream mf(fs::path(dir) / "manifest.tsv");
  if (!mf) throw DatasetError("cannot write manifest in " + dir);
  mf << kManifestHeader << "\n";
  mf << "pair_id\tclass\tsplit\tfile_a\tfile_b\n";
  auto dump = [&](const std::vector<PairRecord>& recs, const char* split) {
    for (const auto& r : recs) {
      std::string fa = image_name(r.id, 'a');
      std::string fb = image_name(r.id, 'b');
      mf << r.id << "\t" << (r.cls == Cls::cs ? "cs" : "noncs") << "\t" << split << "\t" << fa
         << "\t" << fb << "\n";
      write_pht((fs::path(dir) / fa).string(), r.a);
      write_pht((fs::path(dir) / fb).string(), r.b);
    }
  };
  dump(ds.train, "train");
  dump(ds.test, "test");
  if (previews) {
    fs::create_directories(fs::path(dir) / "previews");
    auto grid_of = [&](const std::vector<PairRecord>& recs, bool mod_a) {
      int64_t n = std::min<int64_t>(64, recs.size());
      int s = ds.spec.image_side;
      Tensor batch({n, 1, s, s});
      for (int64_t i = 0; i < n; ++i) {
        const Tensor& src = mod_a ? recs[i].a : recs[i].b;
        std::copy(src.data(), src.data() + s * s, batch.data() + i * s * s);
      }
      return batch;
    };
    save_image_grid((fs::path(dir) / "previews/train_a.png").string(), grid_of(ds.train, true), 8);
    save_image_grid((fs::path(dir) / "previews/train_b.png").string(), grid_of(ds.train, false), 8);
    save_image_grid((fs::path(dir) / "previews/test_a.png").string(), grid_of(ds.test, true), 8);
    save_image_grid((fs::path(dir) / "previews/test_b.png").string(), grid_of(ds.test, false), 8);
  }
}

PhantomDataset load_dataset(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "manifest.tsv");
  if (!mf) throw DatasetError("missing manifest.tsv in " + dir);
  std::string line;
  if (!std::getline(mf, line)) throw DatasetError("empty manifest in " + dir);
  if (line.rfind("#pairsynth-phantom-dataset v", 0) != 0)
    throw DatasetError("not a phantom dataset manifest: " + dir);
  if (line != kManifestHeader)
    throw DatasetError("dataset version mismatch in " + dir + " (found '" + line +
                       "', expected '" + kManifestHeader + "'); regenerate the dataset");
  if (!std::getline(mf, line) || line.rfind("pair_id\t", 0) != 0)
    throw DatasetError("corrupt manifest header in " + dir);

  PhantomDataset ds;
  int counts[2][2] = {{0, 0}, {0, 0}};
  while (std::getline(mf, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id_s, cls_s, split_s, fa, fb;
    if (!std::getline(row, id_s, '\t') || !std::getline(row, cls_s, '\t') ||
        !std::getline(row, split_s, '\t') || !std::getline(row, fa, '\t') ||
        !std::getline(row, fb, '\t'))
      throw DatasetError("corrupt manifest row in " + dir + ": " + line);
    PairRecord rec;
    rec.id = std::stoll(id_s);
    if (cls_s == "cs")
      rec.cls = Cls::cs;
    else if (cls_s == "noncs")
      rec.cls = Cls::noncs;
    else
      throw DatasetError("unknown class '" + cls_s + "' in manifest row: " + line);
    bool train_split;
    if (split_s == "train")
      train_split = true;
    else if (split_s == "test")
      train_split = false;
    else
      throw DatasetError("unknown split '" + split_s + "' in manifest row: " + line);
    rec.a = read_pht((fs::path(dir) / fa).string());
    rec.b = read_pht((fs::path(dir) / fb).string());
    counts[train_split ? 0 : 1][rec.cls == Cls::cs ? 0 : 1]++;
    (train_split ? ds.train : ds.test).push_back(std::move(rec));
  }
  if (ds.train.empty() && ds.test.empty()) throw DatasetError("manifest lists no pairs: " + dir);
  ds.spec.image_side = static_cast<int>(ds.train.empty() ? ds.test[0].a.dim(1) : ds.train[0].a.dim(1));
  ds.spec.train_cs = std::max(1, counts[0][0]);
  ds.spec.train_noncs = std::max(1, counts[0][1]);
  ds.spec.test_cs = std::max(1, counts[1][0]);
  ds.spec.test_noncs = std::max(1, counts[1][1]);
  return ds;
}

Tensor stack_a(const std::vector<const PairRecord*>& recs) {
  if (recs.empty()) throw ShapeError("stack_a: empty record list");
  int64_t s = recs[0]->a.dim(1);
  Tensor out({static_cast<int64_t>(recs.size()), 1, s, s});
  for (size_t i = 0; i < recs.size(); ++i)
    std::copy(recs[i]->a.data(), recs[i]->a.data() + s * s, out.data() + i * s * s);
  return out;
}

Tensor stack_b(const std::vector<const PairRecord*>& recs) {
  if (recs.empty()) throw ShapeError("stack_b: empty record list");
  int64_t s = recs[0]->b.dim(1);
  Tensor out({static_cast<int64_t>(recs.size()), 1, s, s});
  for (size_t i = 0; i < recs.size(); ++i)
    std::copy(recs[i]->b.data(), recs[i]->b.data() + s * s, out.data() + i * s * s);
  return out;
}

}  // namespace pairsynth
