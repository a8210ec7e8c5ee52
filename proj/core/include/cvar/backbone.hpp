#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cvar/param_store.hpp"
#include "cvar/rng.hpp"
#include "cvar/tensor.hpp"

namespace cvar {

enum class BackboneKind { FM, DeepFM, WideDeep, DCN, IPNN, OPNN };

BackboneKind backbone_kind_from_string(const std::string& name);
std::string to_string(BackboneKind kind);
std::vector<BackboneKind> all_backbone_kinds();

struct BackboneConfig {
  std::size_t embedding_dim = 16;   // d
  std::size_t cat_field_count = 0;  // categorical fields inside the feature concat
  std::size_t cont_field_count = 0;
  std::size_t hidden_units = 16;
  // Hidden layers before the 1-unit output. Set to 1 to read "two dense
  // layers" as hidden + output instead.
  std::size_t hidden_layers = 2;
  std::uint64_t seed = 1;

  std::size_t feature_width() const {
    return embedding_dim * cat_field_count + cont_field_count;
  }
  std::size_t concat_width() const { return embedding_dim + feature_width(); }
};

// A CTR model scoring (item vector, feature concat) -> probability. The
// item vector enters as an ordinary field, so any [B x d] tensor can take
// its place; that slot is what the warm-up module swaps in.
class Backbone {
 public:
  virtual ~Backbone() = default;

  BackboneKind kind() const { return kind_; }
  const BackboneConfig& config() const { return cfg_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  // Sigmoid-squashed score per row, shape [B].
  Tensor forward(const Tensor& item, const Tensor& features) const;

 protected:
  Backbone(BackboneKind kind, const BackboneConfig& cfg)
      : kind_(kind), cfg_(cfg) {}
  virtual Tensor logit(const Tensor& item, const Tensor& features) const = 0;

  BackboneKind kind_;
  BackboneConfig cfg_;
  ParameterStore params_;
};

std::unique_ptr<Backbone> make_backbone(BackboneKind kind, const BackboneConfig& cfg);

// Mean binary cross entropy over the batch; predictions are clamped away
// from 0 and 1 before the logs.
Tensor bce_loss(const Tensor& pred, const Tensor& labels);

// Shared building blocks, exposed for the reduction identities in tests.
namespace nets {

// Dense layers named <prefix>/w{i}, <prefix>/b{i} with ReLU between them,
// then <prefix>/wout, <prefix>/bout.
void init_mlp(ParameterStore& store, const std::string& prefix, std::size_t in,
              std::size_t hidden, std::size_t hidden_layers, std::size_t out,
              Rng& rng);
void init_mlp_hidden(ParameterStore& store, const std::string& prefix,
                     std::size_t in, std::size_t hidden, std::size_t hidden_layers,
                     Rng& rng);
Tensor mlp_hidden(const ParameterStore& store, const std::string& prefix,
                  const Tensor& input, std::size_t hidden_layers);
Tensor mlp_logit(const ParameterStore& store, const std::string& prefix,
                 const Tensor& input, std::size_t hidden_layers);

// b + x . w over the full concat; the first-order part of FM and the wide
// part of Wide&Deep.
void init_linear(ParameterStore& store, const std::string& prefix, std::size_t in,
                 Rng& rng);
Tensor linear_logit(const ParameterStore& store, const std::string& prefix,
                    const Tensor& x);

// 0.5 * sum_d((sum_f e_f)^2 - sum_f e_f^2): all pairwise interactions.
Tensor fm_pairwise(const std::vector<Tensor>& fields);

// x0 * (x . w) + b + x
Tensor cross_layer(const Tensor& x0, const Tensor& x, const Tensor& w,
                   const Tensor& b);

// Item vector plus the d-wide categorical slices of the feature concat.
std::vector<Tensor> split_fields(const Tensor& item, const Tensor& features,
                                 std::size_t d, std::size_t cat_fields);

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace nets

}  // namespace cvar
