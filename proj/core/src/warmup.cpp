#include "cvar/warmup.hpp"

#include <cmath>

#include "cvar/errors.hpp"

namespace cvar {

WarmSampleMode warm_mode_from_string(const std::string& s) {
  if (s == "sample") return WarmSampleMode::Sample;
  if (s == "mean") return WarmSampleMode::Mean;
  throw ArgumentError("unknown warm sample mode: " + s + " (expected sample or mean)");
}

std::string to_string(WarmSampleMode mode) {
  return mode == WarmSampleMode::Sample ? "sample" : "mean";
}

WarmupModel::WarmupModel(const WarmupConfig& cfg) : cfg_(cfg) {
  if (cfg.latent_dim == 0) throw ArgumentError("latent_dim must be positive");
  if (cfg.side_width == 0) throw ArgumentError("side_width must be positive");
  Rng rng(cfg.seed);
  // Both encoders emit [mean | log_var]; the decoder consumes [z | freq].
  nets::init_mlp(params_, "enc", cfg.item_dim, cfg.hidden_units,
                 cfg.hidden_layers, 2 * cfg.latent_dim, rng);
  nets::init_mlp(params_, "prior", cfg.side_width, cfg.hidden_units,
                 cfg.hidden_layers, 2 * cfg.latent_dim, rng);
  nets::init_mlp(params_, "dec", cfg.latent_dim + 1, cfg.hidden_units,
                 cfg.hidden_layers, cfg.item_dim, rng);
  for (const char* prefix : {"enc", "prior"}) {
    auto bias = params_.get(std::string(prefix) + "/bout").values_mut();
    for (std::size_t j = cfg.latent_dim; j < 2 * cfg.latent_dim; ++j) {
      bias[j] = cfg.init_log_var;
    }
  }
}

GaussianLatent WarmupModel::encode(const std::string& prefix,
                                   const Tensor& input) const {
  Tensor out = nets::mlp_logit(params_, prefix, input, cfg_.hidden_layers);
  const std::size_t k = cfg_.latent_dim;
  GaussianLatent g;
  g.mean = slice_cols(out, 0, k);
  g.log_var = clamp(slice_cols(out, k, 2 * k), -cfg_.log_var_clamp, cfg_.log_var_clamp);
  return g;
}

GaussianLatent WarmupModel::encode_item(const Tensor& item) const {
  if (item.cols() != cfg_.item_dim) {
    throw DimensionError("encode_item expects width " + std::to_string(cfg_.item_dim) +
                         ", got " + shape_string(item.shape()));
  }
  return encode("enc", item);
}

GaussianLatent WarmupModel::encode_side(const Tensor& side_info) const {
  if (side_info.cols() != cfg_.side_width) {
    throw DimensionError("encode_side expects width " + std::to_string(cfg_.side_width) +
                         ", got " + shape_string(side_info.shape()));
  }
  return encode("prior", side_info);
}

Tensor WarmupModel::reparameterize(const GaussianLatent& g, const Tensor& noise) const {
  if (noise.shape() != g.mean.shape()) {
    throw DimensionError("noise shape " + shape_string(noise.shape()) +
                         " does not match latent " + shape_string(g.mean.shape()));
  }
  // sqrt(sigma) = exp(log_var / 2)
  Tensor std_dev = exp(scale(g.log_var, 0.5));
  return add(g.mean, mul(std_dev, noise));
}

Tensor WarmupModel::sample_noise(std::size_t batch, Rng& rng) const {
  return Tensor::random_normal({batch, cfg_.latent_dim}, rng);
}

Tensor WarmupModel::decode(const Tensor& z, const Tensor& freq) const {
  if (z.cols() != cfg_.latent_dim) {
    throw DimensionError("decode expects latent width " +
                         std::to_string(cfg_.latent_dim) + ", got " +
                         shape_string(z.shape()));
  }
  if (freq.size() != z.rows()) {
    throw DimensionError("frequency condition must have one entry per row");
  }
  Tensor cond = freq.shape().size() == 2 ? freq : reshape(freq, {freq.size(), 1});
  Tensor input = concat({z, cond}, 1);
  return nets::mlp_logit(params_, "dec", input, cfg_.hidden_layers);
}

Tensor WarmupModel::generate(const Tensor& side_info, double freq_override,
                             WarmSampleMode mode, Rng& rng) const {
  if (freq_override < 0.0 || freq_override > 1.0) {
    throw ArgumentError("frequency override must lie in [0, 1], got " +
                        std::to_string(freq_override));
  }
  GaussianLatent prior = encode_side(side_info);
  Tensor z = mode == WarmSampleMode::Sample
                 ? reparameterize(prior, sample_noise(side_info.rows(), rng))
                 : prior.mean;
  Tensor freq = Tensor::full({side_info.rows(), 1}, freq_override);
  return decode(z, freq);
}

Tensor reconstruction_loss(const Tensor& target, const Tensor& recon) {
  if (target.shape() != recon.shape()) {
    throw DimensionError("reconstruction loss shape mismatch: " +
                         shape_string(target.shape()) + " vs " +
                         shape_string(recon.shape()));
  }
  return mean(rowsum(square(sub(target, recon))));
}

Tensor wasserstein_loss(const GaussianLatent& a, const GaussianLatent& b) {
  if (a.mean.shape() != b.mean.shape()) {
    throw DimensionError("latent shapes disagree: " + shape_string(a.mean.shape()) +
                         " vs " + shape_string(b.mean.shape()));
  }
  Tensor mean_term = rowsum(square(sub(a.mean, b.mean)));
  Tensor sa = exp(scale(a.log_var, 0.5));
  Tensor sb = exp(scale(b.log_var, 0.5));
  Tensor std_term = rowsum(square(sub(sa, sb)));
  return mean(add(mean_term, std_term));
}

WarmForward warm_forward(const WarmupModel& model, const Backbone& backbone,
                         const Tensor& side_info, const Tensor& features,
                         const Tensor& freq, const Tensor& noise) {
  WarmForward out;
  out.prior = model.encode_side(side_info);
  Tensor z = model.reparameterize(out.prior, noise);
  out.warm_item = model.decode(z, freq);
  out.pred = backbone.forward(out.warm_item, features);
  return out;
}

WarmLossBreakdown warm_loss(const WarmupModel& model, const Backbone& backbone,
                            const Tensor& item, const Tensor& side_info,
                            const Tensor& features, const Tensor& freq,
                            const Tensor& labels, Rng& noise_rng) {
  const std::size_t batch = item.rows();
  Tensor noise_reg = model.sample_noise(batch, noise_rng);
  Tensor noise_prior = model.sample_noise(batch, noise_rng);

  // Item-vector path: encode, sample, decode under the true frequency.
  GaussianLatent regular = model.encode_item(item);
  Tensor z = model.reparameterize(regular, noise_reg);
  Tensor recon = model.decode(z, freq);

  // Side-information path scored by the frozen backbone.
  WarmForward warm = warm_forward(model, backbone, side_info, features, freq,
                                  noise_prior);

  Tensor ctr = bce_loss(warm.pred, labels);
  Tensor rec = reconstruction_loss(item, recon);
  Tensor w = wasserstein_loss(regular, warm.prior);

  WarmLossBreakdown out;
  out.ctr = ctr.item();
  out.rec = rec.item();
  out.w = w.item();
  out.total = add(ctr, add(scale(rec, model.config().alpha),
                           scale(w, model.config().beta)));
  return out;
}

}  // namespace cvar
