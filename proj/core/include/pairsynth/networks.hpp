#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairsynth/nn.hpp"
#include "pairsynth/stitch.hpp"

namespace pairsynth {

enum class Modality { A, B };

struct ImageBatch {
  Tensor pixels;  // (n, 1, s, s), values in [-1, 1]
  Modality modality = Modality::A;

  int64_t count() const { return pixels.defined() ? pixels.dim(0) : 0; }
  int64_t side() const { return pixels.defined() ? pixels.dim(2) : 0; }
};

struct LatentBatch {
  Tensor z;  // (n, z_dim)

  int64_t count() const { return z.defined() ? z.dim(0) : 0; }
  int64_t dim() const { return z.defined() ? z.dim(1) : 0; }
};

namespace nets {

// Image -> latent. Four stride-2 convolutions, LeakyReLU, then a linear head.
struct Encoder {
  std::vector<nn::Conv2d> convs;
  nn::Linear head;
  int64_t z_dim = 128, image_side = 64;

  Encoder() = default;
  Encoder(int64_t z_dim, int64_t image_side, Rng& rng);
  ad::NodePtr forward(const ad::NodePtr& img) const;  // (n,1,s,s) -> (n,z)
  void collect(nn::ParamList& out, const std::string& prefix) const;
};

// Latent -> modality-A image. A fully-connected stem to 4x4 feature maps, a
// chain of stride-2 transposed-convolution blocks up to a x a, then one
// convolution with f*f kernels whose outputs are the sub-images fed through
// the interlacing stitch. All sub-image heads share the whole trunk and
// differ only in their slice of the final convolution.
struct Decoder {
  nn::Linear fc;
  nn::InstanceNorm2d stem_norm;
  std::vector<nn::ConvT2d> blocks;
  std::vector<nn::InstanceNorm2d> norms;
  nn::Conv2d head;
  StitchConfig stitch;
  int64_t z_dim = 128, image_side = 64;

  // Channel width at each feature-map side (4 -> 256, halving upward).
  static int64_t width_at(int64_t side);

  Decoder() = default;
  Decoder(int64_t z_dim, int64_t image_side, const StitchConfig& cfg, Rng& rng);
  ad::NodePtr forward(const ad::NodePtr& z) const;      // (n,z) -> (n,1,s,s)
  ad::NodePtr sub_images(const ad::NodePtr& z) const;   // (n,f*f,a,a), pre-stitch
  void collect(nn::ParamList& out, const std::string& prefix) const;
  int64_t trunk_param_count() const;  // everything except the head convolution
  int64_t head_param_count() const;
};

// Modality-A image -> modality-B image; 4-level U-Net with optional skips.
struct Translator {
  std::vector<nn::Conv2d> down;
  std::vector<nn::InstanceNorm2d> down_norms;  // none on the first level
  std::vector<nn::ConvT2d> up;
  std::vector<nn::InstanceNorm2d> up_norms;
  nn::ConvT2d out_up;
  nn::Conv2d out_conv;
  bool skips = true;
  int64_t image_side = 64;

  Translator() = default;
  Translator(int64_t image_side, bool skips, Rng& rng);
  ad::NodePtr forward(const ad::NodePtr& img) const;
  void collect(nn::ParamList& out, const std::string& prefix) const;
};

// Latent discriminator for prior matching; outputs one logit per row.
struct LatentDiscriminator {
  std::vector<nn::Linear> layers;
  int64_t z_dim = 128;

  LatentDiscriminator() = default;
  LatentDiscriminator(int64_t z_dim, Rng& rng);
  ad::NodePtr logits(const ad::NodePtr& z) const;  // (n,z) -> (n,1)
  void collect(nn::ParamList& out, const std::string& prefix) const;
};

// Shared stack for the image critics. Wasserstein critics use the raw logit
// (no squashing, as required by the Lipschitz-penalty formulation); the
// class-contrast critics pass it through a sigmoid. No normalization layers:
// the gradient penalty is a per-sample constraint.
struct ImageCritic {
  std::vector<nn::Conv2d> convs;
  nn::Linear head;
  int64_t image_side = 64;

  ImageCritic() = default;
  ImageCritic(int64_t image_side, Rng& rng);
  ad::NodePtr logits(const ad::NodePtr& img) const;  // (n,1,s,s) -> (n,1)
  void collect(nn::ParamList& out, const std::string& prefix) const;
};

}  // namespace nets

struct NetworkOptions {
  int64_t z_dim = 128;
  int64_t image_side = 64;
  StitchConfig stitch{2, 32};
  bool unet_skips = true;
  uint64_t seed = 0;
};

// All eight parameterized maps. Construction is deterministic in the seed.
struct NetworkSet {
  NetworkOptions options;
  nets::Encoder enc;
  nets::Decoder dec;
  nets::Translator translator;
  nets::LatentDiscriminator latent_disc;
  nets::ImageCritic critic_a, critic_b;  // Wasserstein critics per modality
  nets::ImageCritic aux_a, aux_b;        // class-contrast critics per modality

  NetworkSet() = default;
  explicit NetworkSet(const NetworkOptions& opt);

  // Tensor-level helpers (build and drop a graph; deterministic given
  // parameters and inputs).
  LatentBatch encode(const ImageBatch& a) const;
  ImageBatch decode(const LatentBatch& z) const;
  ImageBatch translate(const ImageBatch& a) const;
  double disc_aae(const Tensor& z_row) const;     // probability in (0,1)
  Tensor critic_scores(const ImageBatch& img, bool aux) const;  // (n,1) logits

  nn::ParamList synth_params() const;   // decoder + translator (the synthesizer)
  nn::ParamList encoder_params() const;
  nn::ParamList latent_disc_params() const;
  nn::ParamList critic_params(Modality m) const;
  nn::ParamList aux_params(Modality m) const;
  nn::ParamList all_params() const;  // fixed order used by checkpoints
};

// Draws a batch from the latent prior p(z) = N(0, I).
Tensor sample_prior(Rng& rng, int64_t n, int64_t z_dim);

}  // namespace pairsynth
