#include "pairsynth/networks.hpp"

#include <cmath>

#include "pairsynth/errors.hpp"

namespace pairsynth {

namespace nets {

namespace {
constexpr double kLeakySlope = 0.2;
}

// ---- Encoder ----

Encoder::Encoder(int64_t z_dim_, int64_t image_side_, Rng& rng)
    : z_dim(z_dim_), image_side(image_side_) {
  if (image_side % 16 != 0)
    throw ConfigError("encoder: image side must be divisible by 16, got " +
                      std::to_string(image_side));
  int64_t chans[] = {1, 8, 16, 32, 64};
  for (int i = 0; i < 4; ++i) convs.emplace_back(chans[i], chans[i + 1], 4, 2, 1, rng);
  int64_t feat = 64 * (image_side / 16) * (image_side / 16);
  head = nn::Linear(feat, z_dim, rng, nn::Init::xavier);
}

ad::NodePtr Encoder::forward(const ad::NodePtr& img) const {
  ad::NodePtr x = img;
  for (const auto& c : convs) x = ad::leaky_relu(c.forward(x), kLeakySlope);
  return head.forward(nn::flatten(x));
}

void Encoder::collect(nn::ParamList& out, const std::string& prefix) const {
  for (size_t i = 0; i < convs.size(); ++i) convs[i].collect(out, prefix + ".conv" + std::to_string(i));
  head.collect(out, prefix + ".head");
}

// ---- Decoder ----

int64_t Decoder::width_at(int64_t side) {
  // 4 -> 256, 8 -> 64, 16 -> 32, 32 -> 16, 64 -> 8
  if (side == 4) return 256;
  int64_t w = 256 / (side / 4) / 2;
  return w < 8 ? 8 : w;
}

Decoder::Decoder(int64_t z_dim_, int64_t image_side_, const StitchConfig& cfg, Rng& rng)
    : stitch(cfg), z_dim(z_dim_), image_side(image_side_) {
  cfg.validate();
  if (static_cast<int64_t>(cfg.out_side()) != image_side)
    throw ConfigError("stitch config " + cfg.name() + " produces side " +
                      std::to_string(cfg.out_side()) + ", expected " + std::to_string(image_side));
  int64_t a = cfg.a;
  if (a < 4 || (a & (a - 1)) != 0)
    throw ConfigError("stitch config " + cfg.name() +
                      " needs a sub-image side in {4, 8, 16, 32, 64}");
  fc = nn::Linear(z_dim, width_at(4) * 4 * 4, rng);
  stem_norm = nn::InstanceNorm2d(width_at(4));
  for (int64_t side = 4; side < a; side *= 2) {
    blocks.emplace_back(width_at(side), width_at(side * 2), 4, 2, 1, rng);
    norms.emplace_back(width_at(side * 2));
  }
  head = nn::Conv2d(width_at(a), cfg.sub_count(), 3, 1, 1, rng, nn::Init::xavier);
}

ad::NodePtr Decoder::sub_images(const ad::NodePtr& z) const {
  const Tensor& v = z->value;
  if (v.rank() != 2 || v.dim(1) != z_dim)
    throw ShapeError("decode: latent batch " + v.shape_str() + " does not have dimension " +
                     std::to_string(z_dim));
  ad::NodePtr x = ad::reshape(fc.forward(z), {v.dim(0), width_at(4), 4, 4});
  x = ad::relu(stem_norm.forward(x));
  for (size_t i = 0; i < blocks.size(); ++i)
    x = ad::relu(norms[i].forward(blocks[i].forward(x)));
  return ad::tanh(head.forward(x));
}

ad::NodePtr Decoder::forward(const ad::NodePtr& z) const {
  return ad::stitch(sub_images(z), stitch.f);
}

void Decoder::collect(nn::ParamList& out, const std::string& prefix) const {
  fc.collect(out, prefix + ".fc");
  stem_norm.collect(out, prefix + ".stem_norm");
  for (size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].collect(out, prefix + ".up" + std::to_string(i));
    norms[i].collect(out, prefix + ".norm" + std::to_string(i));
  }
  head.collect(out, prefix + ".head");
}

int64_t Decoder::trunk_param_count() const {
  nn::ParamList all;
  collect(all, "d");
  nn::ParamList h;
  head.collect(h, "d.head");
  return nn::param_count(all) - nn::param_count(h);
}

int64_t Decoder::head_param_count() const {
  nn::ParamList h;
  head.collect(h, "d.head");
  return nn::param_count(h);
}

// ---- Translator ----

Translator::Translator(int64_t image_side_, bool skips_, Rng& rng)
    : skips(skips_), image_side(image_side_) {
  if (image_side % 16 != 0)
    throw ConfigError("translator: image side must be divisible by 16, got " +
                      std::to_string(image_side));
  int64_t enc_ch[] = {1, 8, 16, 32, 64};
  for (int i = 0; i < 4; ++i) down.emplace_back(enc_ch[i], enc_ch[i + 1], 4, 2, 1, rng);
  for (int i = 0; i < 3; ++i) down_norms.emplace_back(enc_ch[i + 2]);  // levels 1..3

  // Decoder levels 3 -> 1; with skips the input channels double via concat.
  int64_t dec_out[] = {32, 16, 8};
  int64_t skip_ch[] = {32, 16, 8};  // e2, e1, e0
  int64_t in_ch = 64;
  for (int i = 0; i < 3; ++i) {
    up.emplace_back(in_ch, dec_out[i], 4, 2, 1, rng);
    up_norms.emplace_back(dec_out[i]);
    in_ch = dec_out[i] + (skips ? skip_ch[i] : 0);
  }
  out_up = nn::ConvT2d(in_ch, 8, 4, 2, 1, rng);
  out_conv = nn::Conv2d(8, 1, 3, 1, 1, rng, nn::Init::xavier);
}

ad::NodePtr Translator::forward(const ad::NodePtr& img) const {
  ad::NodePtr e0 = ad::leaky_relu(down[0].forward(img), kLeakySlope);
  ad::NodePtr e1 = ad::leaky_relu(down_norms[0].forward(down[1].forward(e0)), kLeakySlope);
  ad::NodePtr e2 = ad::leaky_relu(down_norms[1].forward(down[2].forward(e1)), kLeakySlope);
  ad::NodePtr e3 = ad::leaky_relu(down_norms[2].forward(down[3].forward(e2)), kLeakySlope);

  ad::NodePtr x = ad::relu(up_norms[0].forward(up[0].forward(e3)));
  if (skips) x = ad::concat_ch(x, e2);
  x = ad::relu(up_norms[1].forward(up[1].forward(x)));
  if (skips) x = ad::concat_ch(x, e1);
  x = ad::relu(up_norms[2].forward(up[2].forward(x)));
  if (skips) x = ad::concat_ch(x, e0);
  x = ad::relu(out_up.forward(x));
  return ad::tanh(out_conv.forward(x));
}

void Translator::collect(nn::ParamList& out, const std::string& prefix) const {
  for (size_t i = 0; i < down.size(); ++i) down[i].collect(out, prefix + ".down" + std::to_string(i));
  for (size_t i = 0; i < down_norms.size(); ++i)
    down_norms[i].collect(out, prefix + ".down_norm" + std::to_string(i));
  for (size_t i = 0; i < up.size(); ++i) up[i].collect(out, prefix + ".up" + std::to_string(i));
  for (size_t i = 0; i < up_norms.size(); ++i)
    up_norms[i].collect(out, prefix + ".up_norm" + std::to_string(i));
  out_up.collect(out, prefix + ".out_up");
  out_conv.collect(out, prefix + ".out_conv");
}

// ---- LatentDiscriminator ----

LatentDiscriminator::LatentDiscriminator(int64_t z_dim_, Rng& rng) : z_dim(z_dim_) {
  layers.emplace_back(z_dim, 128, rng);
  layers.emplace_back(128, 64, rng);
  layers.emplace_back(64, 1, rng, nn::Init::xavier);
}

ad::NodePtr LatentDiscriminator::logits(const ad::NodePtr& z) const {
  ad::NodePtr x = z;
  for (size_t i = 0; i + 1 < layers.size(); ++i)
    x = ad::leaky_relu(layers[i].forward(x), kLeakySlope);
  return layers.back().forward(x);
}

void LatentDiscriminator::collect(nn::ParamList& out, const std::string& prefix) const {
  for (size_t i = 0; i < layers.size(); ++i) layers[i].collect(out, prefix + ".fc" + std::to_string(i));
}

// ---- ImageCritic ----

ImageCritic::ImageCritic(int64_t image_side_, Rng& rng) : image_side(image_side_) {
  int64_t chans[] = {1, 8, 16, 32, 64};
  for (int i = 0; i < 4; ++i) convs.emplace_back(chans[i], chans[i + 1], 4, 2, 1, rng);
  int64_t feat = 64 * (image_side / 16) * (image_side / 16);
  head = nn::Linear(feat, 1, rng, nn::Init::xavier);
}

ad::NodePtr ImageCritic::logits(const ad::NodePtr& img) const {
  const Tensor& v = img->value;
  if (v.rank() != 4 || v.dim(1) != 1 || v.dim(2) != image_side || v.dim(3) != image_side)
    throw ShapeError("critic: image batch " + v.shape_str() + " does not match side " +
                     std::to_string(image_side));
  ad::NodePtr x = img;
  for (const auto& c : convs) x = ad::leaky_relu(c.forward(x), kLeakySlope);
  return head.forward(nn::flatten(x));
}

void ImageCritic::collect(nn::ParamList& out, const std::string& prefix) const {
  for (size_t i = 0; i < convs.size(); ++i) convs[i].collect(out, prefix + ".conv" + std::to_string(i));
  head.collect(out, prefix + ".head");
}

}  // namespace nets

// ---- NetworkSet ----

NetworkSet::NetworkSet(const NetworkOptions& opt) : options(opt) {
  Rng rng(opt.seed);
  enc = nets::Encoder(opt.z_dim, opt.image_side, rng);
  dec = nets::Decoder(opt.z_dim, opt.image_side, opt.stitch, rng);
  translator = nets::Translator(opt.image_side, opt.unet_skips, rng);
  latent_disc = nets::LatentDiscriminator(opt.z_dim, rng);
  critic_a = nets::ImageCritic(opt.image_side, rng);
  critic_b = nets::ImageCritic(opt.image_side, rng);
  aux_a = nets::ImageCritic(opt.image_side, rng);
  aux_b = nets::ImageCritic(opt.image_side, rng);
}

LatentBatch NetworkSet::encode(const ImageBatch& a) const {
  if (a.modality != Modality::A)
    throw ShapeError("encode expects modality-A images");
  ad::NodePtr z = enc.forward(ad::constant(a.pixels));
  if (!z->value.all_finite())
    throw TrainingError("encode produced non-finite values on batch of " +
                        a.pixels.shape_str());
  return LatentBatch{z->value};
}

ImageBatch NetworkSet::decode(const LatentBatch& z) const {
  ad::NodePtr img = dec.forward(ad::constant(z.z));
  return ImageBatch{img->value, Modality::A};
}

ImageBatch NetworkSet::translate(const ImageBatch& a) const {
  if (a.modality != Modality::A)
    throw ShapeError("translate expects modality-A images");
  ad::NodePtr img = translator.forward(ad::constant(a.pixels));
  return ImageBatch{img->value, Modality::B};
}

double NetworkSet::disc_aae(const Tensor& z_row) const {
  Tensor z = z_row.reshaped({1, z_row.numel()});
  ad::NodePtr p = ad::sigmoid(latent_disc.logits(ad::constant(z)));
  return p->value.item();
}

Tensor NetworkSet::critic_scores(const ImageBatch& img, bool aux) const {
  const nets::ImageCritic& c = img.modality == Modality::A ? (aux ? aux_a : critic_a)
                                                           : (aux ? aux_b : critic_b);
  ad::NodePtr s = c.logits(ad::constant(img.pixels));
  return aux ? ad::sigmoid(s)->value : s->value;
}

nn::ParamList NetworkSet::synth_params() const {
  nn::ParamList out;
  dec.collect(out, "dec");
  translator.collect(out, "g");
  return out;
}

nn::ParamList NetworkSet::encoder_params() const {
  nn::ParamList out;
  enc.collect(out, "enc");
  return out;
}

nn::ParamList NetworkSet::latent_disc_params() const {
  nn::ParamList out;
  latent_disc.collect(out, "daae");
  return out;
}

nn::ParamList NetworkSet::critic_params(Modality m) const {
  nn::ParamList out;
  if (m == Modality::A)
    critic_a.collect(out, "dadc");
  else
    critic_b.collect(out, "dt2w");
  return out;
}

nn::ParamList NetworkSet::aux_params(Modality m) const {
  nn::ParamList out;
  if (m == Modality::A)
    aux_a.collect(out, "cadc");
  else
    aux_b.collect(out, "ct2w");
  return out;
}

nn::ParamList NetworkSet::all_params() const {
  nn::ParamList out;
  enc.collect(out, "enc");
  dec.collect(out, "dec");
  translator.collect(out, "g");
  latent_disc.collect(out, "daae");
  critic_a.collect(out, "dadc");
  critic_b.collect(out, "dt2w");
  aux_a.collect(out, "cadc");
  aux_b.collect(out, "ct2w");
  return out;
}

Tensor sample_prior(Rng& rng, int64_t n, int64_t z_dim) {
  return rng.normal_tensor({n, z_dim});
}

}  // namespace pairsynth
