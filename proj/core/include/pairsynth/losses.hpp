#pragma once

#include <string>
#include <vector>

#include "pairsynth/networks.hpp"
#include "pairsynth/rng.hpp"

namespace pairsynth {

struct LossWeights {
  double alpha = 1.0;       // semi-supervised weight
  double beta = 0.1;        // class-contrast (auxiliary distance) weight
  double lambda_adc = 10.0; // gradient-penalty coefficient, modality A critic
  double lambda_t2w = 10.0; // gradient-penalty coefficient, modality B critic

  void validate() const;  // all finite and non-negative
};

// Named scalar telemetry for one training step.
struct LossReport {
  std::vector<std::pair<std::string, double>> terms;

  void add(const std::string& name, double v) { terms.emplace_back(name, v); }
  bool has(const std::string& name) const;
  double get(const std::string& name) const;  // throws if absent
  bool all_finite() const;
};

namespace losses {

// Mean squared pixel error of the A pair plus that of the B pair.
ad::NodePtr recon_loss(const ad::NodePtr& a, const ad::NodePtr& a_hat, const ad::NodePtr& t,
                       const ad::NodePtr& t_hat);

struct AaeTerms {
  ad::NodePtr d_loss;  // trains the latent discriminator (cross-entropy form)
  ad::NodePtr g_loss;  // trains the encoder adversarially (non-saturating)
};
AaeTerms aae_terms(const nets::LatentDiscriminator& disc, const ad::NodePtr& z_prior,
                   const ad::NodePtr& z_enc);

struct WTerms {
  ad::NodePtr critic_loss;  // E[D(fake)] - E[D(real)] + lambda * gp
  ad::NodePtr gen_loss;     // -E[D(fake)]
  ad::NodePtr gp;           // E[(||grad_x D(x~)||_2 - 1)^2], x~ on the real-fake segment
};
// `fake` may be attached to the generator graph; the critic-side terms detach
// it internally. Throws ConfigError pointing at the weight-clip fallback if an
// op in the critic cannot be differentiated twice.
WTerms w_loss(const nets::ImageCritic& critic, const ad::NodePtr& real, const ad::NodePtr& fake,
              double lambda, Rng& rng);
// Just the generator-side term (avoids the penalty machinery).
ad::NodePtr w_generator_loss(const nets::ImageCritic& critic, const ad::NodePtr& fake);

struct AuxTerms {
  ad::NodePtr critic_loss;  // trains C to separate real non-target from fake target
  ad::NodePtr synth_loss;   // minimized by the synthesizer to widen that separation
};
AuxTerms aux_jsd_terms(const nets::ImageCritic& critic, const ad::NodePtr& real_noncs,
                       const ad::NodePtr& fake_cs);

// Synthesizer-side scalar combining every active term; null members are
// skipped. alpha scales the paired + marginal terms, beta the class-contrast
// maximization (whose contribution is already in minimization form).
struct SynthTerms {
  ad::NodePtr recon, aae_g, w_gen_a, w_gen_b, ad_synth_a, ad_synth_b;
};
ad::NodePtr total_objective(const SynthTerms& parts, const LossWeights& w);
double total_objective(const LossReport& parts, const LossWeights& w);

}  // namespace losses

}  // namespace pairsynth
