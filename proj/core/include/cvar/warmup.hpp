#pragma once

#include <cstdint>
#include <string>

#include "cvar/backbone.hpp"
#include "cvar/param_store.hpp"
#include "cvar/rng.hpp"
#include "cvar/tensor.hpp"

namespace cvar {

// Diagonal Gaussian over the latent space; sigma = exp(log_var) is the
// per-coordinate variance.
struct GaussianLatent {
  Tensor mean;     // [B x k]
  Tensor log_var;  // [B x k], clamped so sigma stays positive and bounded
};

struct WarmupConfig {
  std::size_t item_dim = 16;    // d, width of the item vectors
  std::size_t side_width = 16;  // width of the side-information concat
  std::size_t latent_dim = 16;  // k
  double alpha = 1.0;           // reconstruction weight
  double beta = 1.0;            // distribution alignment weight
  std::size_t hidden_units = 16;
  std::size_t hidden_layers = 2;
  double log_var_clamp = 10.0;
  // Initial bias of the encoders' log-variance head. Starting the latent
  // near-deterministic keeps the decoder from learning to ignore z when
  // the item vectors are much smaller than a unit Gaussian.
  double init_log_var = -4.0;
  std::uint64_t seed = 1;
};

enum class WarmSampleMode { Sample, Mean };

WarmSampleMode warm_mode_from_string(const std::string& s);
std::string to_string(WarmSampleMode mode);

// Generates enhanced item vectors from side information. Two encoders map
// item vectors and side information into a shared latent Gaussian space;
// one decoder, conditioned on normalized item frequency, maps latents back
// to item-vector space. The decoder parameters are shared between the
// item-vector path and the side-information path.
class WarmupModel {
 public:
  explicit WarmupModel(const WarmupConfig& cfg);

  const WarmupConfig& config() const { return cfg_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  GaussianLatent encode_item(const Tensor& item) const;       // regular encoder
  GaussianLatent encode_side(const Tensor& side_info) const;  // prior encoder

  // z = mean + sqrt(sigma) * noise; gradient flows to mean and log_var only.
  Tensor reparameterize(const GaussianLatent& g, const Tensor& noise) const;
  Tensor sample_noise(std::size_t batch, Rng& rng) const;

  // Decode [z | freq] back to item-vector space. freq is [B] or [B x 1].
  Tensor decode(const Tensor& z, const Tensor& freq) const;

  // Inference path: side info -> prior latent -> decode under an overridden
  // frequency condition (1.0 reproduces "largest item frequency").
  Tensor generate(const Tensor& side_info, double freq_override,
                  WarmSampleMode mode, Rng& rng) const;

 private:
  GaussianLatent encode(const std::string& prefix, const Tensor& input) const;
  WarmupConfig cfg_;
  ParameterStore params_;
};

// mean over the batch of squared Euclidean distance.
Tensor reconstruction_loss(const Tensor& target, const Tensor& recon);

// mean over the batch of the closed-form squared 2-Wasserstein distance
// between diagonal Gaussians: |m - m'|^2 + sum_j (sqrt(s_j) - sqrt(s'_j))^2.
Tensor wasserstein_loss(const GaussianLatent& a, const GaussianLatent& b);

struct WarmForward {
  Tensor pred;       // [B] scores from the backbone fed the generated vectors
  Tensor warm_item;  // [B x d]
  GaussianLatent prior;
};

// Scores a batch with the generated item vectors in the item slot. Callers
// freeze backbone/embedding stores around the backward pass so gradient
// reaches only the warm-up parameters.
WarmForward warm_forward(const WarmupModel& model, const Backbone& backbone,
                         const Tensor& side_info, const Tensor& features,
                         const Tensor& freq, const Tensor& noise);

struct WarmLossBreakdown {
  Tensor total;  // ctr + alpha * rec + beta * w
  double ctr = 0.0;
  double rec = 0.0;
  double w = 0.0;
};

// Full training loss: CTR loss on the generated-vector path, reconstruction
// of the current item vectors, and latent alignment.
WarmLossBreakdown warm_loss(const WarmupModel& model, const Backbone& backbone,
                            const Tensor& item, const Tensor& side_info,
                            const Tensor& features, const Tensor& freq,
                            const Tensor& labels, Rng& noise_rng);

}  // namespace cvar
