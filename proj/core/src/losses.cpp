#include "pairsynth/losses.hpp"

#include <cmath>

#include "pairsynth/errors.hpp"

namespace pairsynth {

void LossWeights::validate() const {
  for (double v : {alpha, beta, lambda_adc, lambda_t2w})
    if (!std::isfinite(v) || v < 0.0)
      throw ConfigError("loss weights must be finite and non-negative");
}

bool LossReport::has(const std::string& name) const {
  for (const auto& [k, v] : terms)
    if (k == name) return true;
  return false;
}

double LossReport::get(const std::string& name) const {
  for (const auto& [k, v] : terms)
    if (k == name) return v;
  throw Error(ExitCode::failure, "loss report has no term '" + name + "'");
}

bool LossReport::all_finite() const {
  for (const auto& [k, v] : terms)
    if (!std::isfinite(v)) return false;
  return true;
}

namespace losses {

using ad::NodePtr;

NodePtr recon_loss(const NodePtr& a, const NodePtr& a_hat, const NodePtr& t,
                   const NodePtr& t_hat) {
  check_same_shape(a->value, a_hat->value, "recon_loss(a)");
  check_same_shape(t->value, t_hat->value, "recon_loss(t)");
  return ad::add(ad::mean_all(ad::square(ad::sub(a, a_hat))),
                 ad::mean_all(ad::square(ad::sub(t, t_hat))));
}

AaeTerms aae_terms(const nets::LatentDiscriminator& disc, const NodePtr& z_prior,
                   const NodePtr& z_enc) {
  if (z_prior->value.dim(0) != z_enc->value.dim(0))
    throw ShapeError("aae_terms: batch mismatch between " + z_prior->value.shape_str() + " and " +
                     z_enc->value.shape_str());
  NodePtr s_prior = disc.logits(z_prior);
  NodePtr s_enc_d = disc.logits(ad::detach(z_enc));
  NodePtr s_enc_g = disc.logits(z_enc);
  AaeTerms out;
  // -E[log D(z_p)] - E[log(1 - D(z_q))], the cross-entropy estimate whose
  // optimum is the Jensen-Shannon divergence up to constants.
  out.d_loss = ad::add(ad::mean_all(ad::softplus(ad::neg(s_prior))),
                       ad::mean_all(ad::softplus(s_enc_d)));
  // Non-saturating encoder term: -E[log D(z_q)].
  out.g_loss = ad::mean_all(ad::softplus(ad::neg(s_enc_g)));
  return out;
}

namespace {

// x~ = eps * real + (1 - eps) * fake with per-sample eps ~ U(0, 1).
Tensor interpolate_samples(const Tensor& real, const Tensor& fake, Rng& rng) {
  Tensor out(real.shape());
  const int64_t n = real.dim(0);
  const int64_t per = real.numel() / n;
  const double* pr = real.data();
  const double* pf = fake.data();
  double* po = out.data();
  for (int64_t i = 0; i < n; ++i) {
    double eps = rng.uniform();
    for (int64_t j = 0; j < per; ++j)
      po[i * per + j] = eps * pr[i * per + j] + (1.0 - eps) * pf[i * per + j];
  }
  return out;
}

}  // namespace

WTerms w_loss(const nets::ImageCritic& critic, const NodePtr& real, const NodePtr& fake,
              double lambda, Rng& rng) {
  check_same_shape(real->value, fake->value, "w_loss");
  NodePtr fake_d = ad::detach(fake);
  NodePtr mean_fake = ad::mean_all(critic.logits(fake_d));
  NodePtr mean_real = ad::mean_all(critic.logits(real));

  NodePtr x_mix = ad::leaf(interpolate_samples(real->value, fake->value, rng));
  WTerms out;
  try {
    NodePtr score_sum = ad::reduce_sum_all(critic.logits(x_mix));
    NodePtr g = ad::grad(score_sum, {x_mix}, /*create_graph=*/true)[0];
    NodePtr norm = ad::sqrt(ad::scalar_add(ad::reduce_sum_axes(ad::square(g), {1, 2, 3}), 1e-16));
    out.gp = ad::mean_all(ad::square(ad::scalar_add(norm, -1.0)));
  } catch (const Error& e) {
    if (e.code() == ExitCode::config)
      throw ConfigError(std::string(e.what()) +
                        "; the gradient penalty needs twice-differentiable critics, "
                        "use lipschitz_mode=weight_clip instead");
    throw;
  }
  out.critic_loss = ad::add(ad::sub(mean_fake, mean_real), ad::scalar_mul(out.gp, lambda));
  out.gen_loss = ad::neg(ad::mean_all(critic.logits(fake)));
  return out;
}

NodePtr w_generator_loss(const nets::ImageCritic& critic, const NodePtr& fake) {
  return ad::neg(ad::mean_all(critic.logits(fake)));
}

AuxTerms aux_jsd_terms(const nets::ImageCritic& critic, const NodePtr& real_noncs,
                       const NodePtr& fake_cs) {
  check_same_shape(real_noncs->value, fake_cs->value, "aux_jsd_terms");
  NodePtr s_real = critic.logits(real_noncs);
  NodePtr s_fake_d = critic.logits(ad::detach(fake_cs));
  NodePtr s_fake_g = critic.logits(fake_cs);
  AuxTerms out;
  // Critic separates real non-target (label 1) from synthetic target (label 0).
  out.critic_loss = ad::add(ad::mean_all(ad::softplus(ad::neg(s_real))),
                            ad::mean_all(ad::softplus(s_fake_d)));
  // The synthesizer maximizes the divergence estimate, i.e. pushes its outputs
  // to score low under the critic; -E[log(1 - C(fake))] in minimization form.
  out.synth_loss = ad::mean_all(ad::softplus(s_fake_g));
  return out;
}

NodePtr total_objective(const SynthTerms& parts, const LossWeights& w) {
  w.validate();
  NodePtr sup;
  for (const NodePtr& p : {parts.recon, parts.aae_g, parts.w_gen_a, parts.w_gen_b})
    if (p) sup = sup ? ad::add(sup, p) : p;
  NodePtr aux;
  for (const NodePtr& p : {parts.ad_synth_a, parts.ad_synth_b})
    if (p) aux = aux ? ad::add(aux, p) : p;

  NodePtr total;
  if (sup) total = ad::scalar_mul(sup, w.alpha);
  if (aux) {
    NodePtr scaled = ad::scalar_mul(aux, w.beta);
    total = total ? ad::add(total, scaled) : scaled;
  }
  if (!total) total = ad::constant(Tensor::scalar(0.0));
  return total;
}

double total_objective(const LossReport& parts, const LossWeights& w) {
  w.validate();
  double sup = 0.0, aux = 0.0;
  for (const char* k : {"recon", "aae_g", "w_gen_a", "w_gen_b"})
    if (parts.has(k)) sup += parts.get(k);
  for (const char* k : {"ad_synth_a", "ad_synth_b"})
    if (parts.has(k)) aux += parts.get(k);
  return w.alpha * sup + w.beta * aux;
}

}  // namespace losses

}  // namespace pairsynth
