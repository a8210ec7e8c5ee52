#include "cvar/backbone.hpp"

#include <cmath>

#include "cvar/errors.hpp"

namespace cvar {

BackboneKind backbone_kind_from_string(const std::string& name) {
  if (name == "fm") return BackboneKind::FM;
  if (name == "deepfm") return BackboneKind::DeepFM;
  if (name == "widedeep" || name == "wide&deep") return BackboneKind::WideDeep;
  if (name == "dcn") return BackboneKind::DCN;
  if (name == "ipnn") return BackboneKind::IPNN;
  if (name == "opnn") return BackboneKind::OPNN;
  throw ArgumentError("unknown backbone: " + name +
                      " (expected fm, deepfm, widedeep, dcn, ipnn, opnn)");
}

std::string to_string(BackboneKind kind) {
  switch (kind) {
    case BackboneKind::FM: return "fm";
    case BackboneKind::DeepFM: return "deepfm";
    case BackboneKind::WideDeep: return "widedeep";
    case BackboneKind::DCN: return "dcn";
    case BackboneKind::IPNN: return "ipnn";
    case BackboneKind::OPNN: return "opnn";
  }
  return "?";
}

std::vector<BackboneKind> all_backbone_kinds() {
  return {BackboneKind::FM,  BackboneKind::DeepFM, BackboneKind::WideDeep,
          BackboneKind::DCN, BackboneKind::IPNN,   BackboneKind::OPNN};
}

Tensor bce_loss(const Tensor& pred, const Tensor& labels) {
  return bce(pred, labels);
}

namespace nets {

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> data(fan_in * fan_out);
  for (double& x : data) x = rng.uniform(-limit, limit);
  return Tensor({fan_in, fan_out}, std::move(data));
}

void init_mlp_hidden(ParameterStore& store, const std::string& prefix,
                     std::size_t in, std::size_t hidden, std::size_t hidden_layers,
                     Rng& rng) {
  std::size_t width = in;
  for (std::size_t i = 0; i < hidden_layers; ++i) {
    store.add(prefix + "/w" + std::to_string(i), xavier_uniform(width, hidden, rng));
    store.add(prefix + "/b" + std::to_string(i), Tensor::zeros({hidden}));
    width = hidden;
  }
}

void init_mlp(ParameterStore& store, const std::string& prefix, std::size_t in,
              std::size_t hidden, std::size_t hidden_layers, std::size_t out,
              Rng& rng) {
  init_mlp_hidden(store, prefix, in, hidden, hidden_layers, rng);
  const std::size_t width = hidden_layers > 0 ? hidden : in;
  store.add(prefix + "/wout", xavier_uniform(width, out, rng));
  store.add(prefix + "/bout", Tensor::zeros({out}));
}

Tensor mlp_hidden(const ParameterStore& store, const std::string& prefix,
                  const Tensor& input, std::size_t hidden_layers) {
  Tensor h = input;
  for (std::size_t i = 0; i < hidden_layers; ++i) {
    const Tensor& w = store.get(prefix + "/w" + std::to_string(i));
    const Tensor& b = store.get(prefix + "/b" + std::to_string(i));
    h = relu(add(matmul(h, w), b));
  }
  return h;
}

Tensor mlp_logit(const ParameterStore& store, const std::string& prefix,
                 const Tensor& input, std::size_t hidden_layers) {
  Tensor h = mlp_hidden(store, prefix, input, hidden_layers);
  return add(matmul(h, store.get(prefix + "/wout")), store.get(prefix + "/bout"));
}

void init_linear(ParameterStore& store, const std::string& prefix, std::size_t in,
                 Rng& rng) {
  store.add(prefix + "/w", xavier_uniform(in, 1, rng));
  store.add(prefix + "/b", Tensor::zeros({1}));
}

Tensor linear_logit(const ParameterStore& store, const std::string& prefix,
                    const Tensor& x) {
  return add(matmul(x, store.get(prefix + "/w")), store.get(prefix + "/b"));
}

Tensor fm_pairwise(const std::vector<Tensor>& fields) {
  if (fields.empty()) throw ArgumentError("fm_pairwise needs at least one field");
  Tensor total = fields[0];
  Tensor total_sq = square(fields[0]);
  for (std::size_t i = 1; i < fields.size(); ++i) {
    total = add(total, fields[i]);
    total_sq = add(total_sq, square(fields[i]));
  }
  return scale(rowsum(sub(square(total), total_sq)), 0.5);
}

Tensor cross_layer(const Tensor& x0, const Tensor& x, const Tensor& w,
                   const Tensor& b) {
  Tensor xw = matmul(x, w);  // [B x 1]
  return add(add(scale_rows(x0, xw), b), x);
}

std::vector<Tensor> split_fields(const Tensor& item, const Tensor& features,
                                 std::size_t d, std::size_t cat_fields) {
  std::vector<Tensor> out;
  out.reserve(cat_fields + 1);
  out.push_back(item);
  for (std::size_t f = 0; f < cat_fields; ++f) {
    out.push_back(slice_cols(features, f * d, (f + 1) * d));
  }
  return out;
}

}  // namespace nets

Tensor Backbone::forward(const Tensor& item, const Tensor& features) const {
  if (item.shape().size() != 2 || item.shape()[1] != cfg_.embedding_dim) {
    throw DimensionError("backbone expects item vectors of width " +
                         std::to_string(cfg_.embedding_dim) + ", got " +
                         shape_string(item.shape()));
  }
  if (features.shape().size() != 2 || features.shape()[1] != cfg_.feature_width()) {
    throw DimensionError("backbone expects feature width " +
                         std::to_string(cfg_.feature_width()) + ", got " +
                         shape_string(features.shape()));
  }
  if (item.shape()[0] != features.shape()[0]) {
    throw DimensionError("item and feature batch sizes disagree");
  }
  Tensor out = sigmoid(logit(item, features));
  return reshape(out, {item.shape()[0]});
}

namespace {

using nets::cross_layer;
using nets::fm_pairwise;
using nets::init_linear;
using nets::init_mlp;
using nets::init_mlp_hidden;
using nets::linear_logit;
using nets::mlp_hidden;
using nets::mlp_logit;
using nets::split_fields;
using nets::xavier_uniform;

class FmModel final : public Backbone {
 public:
  FmModel(const BackboneConfig& cfg) : Backbone(BackboneKind::FM, cfg) {
    Rng rng(cfg.seed);
    init_linear(params_, "fm", cfg.concat_width(), rng);
  }

  Tensor logit(const Tensor& item, const Tensor& features) const override {
    Tensor concat_all = concat({item, features}, 1);
    Tensor first = linear_logit(params_, "fm", concat_all);
    Tensor second = fm_pairwise(
        split_fields(item, features, cfg_.embedding_dim, cfg_.cat_field_count));
    return add(first, second);
  }
};

class WideDeepModel final : public Backbone {
 public:
  WideDeepModel(const BackboneConfig& cfg) : Backbone(BackboneKind::WideDeep, cfg) {
    Rng rng(cfg.seed);
    init_linear(params_, "wide", cfg.concat_width(), rng);
    init_mlp(params_, "deep", cfg.concat_width(), cfg.hidden_units,
             cfg.hidden_layers, 1, rng);
  }

  Tensor logit(const Tensor& item, const Tensor& features) const override {
    Tensor concat_all = concat({item, features}, 1);
    Tensor wide = linear_logit(params_, "wide", concat_all);
    Tensor deep = mlp_logit(params_, "deep", concat_all, cfg_.hidden_layers);
    return add(wide, deep);
  }
};

class DeepFmModel final : public Backbone {
 public:
  DeepFmModel(const BackboneConfig& cfg) : Backbone(BackboneKind::DeepFM, cfg) {
    Rng rng(cfg.seed);
    init_linear(params_, "fm", cfg.concat_width(), rng);
    init_mlp(params_, "deep", cfg.concat_width(), cfg.hidden_units,
             cfg.hidden_layers, 1, rng);
  }

  Tensor logit(const Tensor& item, const Tensor& features) const override {
    Tensor concat_all = concat({item, features}, 1);
    Tensor first = linear_logit(params_, "fm", concat_all);
    Tensor second = fm_pairwise(
        split_fields(item, features, cfg_.embedding_dim, cfg_.cat_field_count));
    Tensor deep = mlp_logit(params_, "deep", concat_all, cfg_.hidden_layers);
    return add(add(first, second), deep);
  }
};

class DcnModel final : public Backbone {
 public:
  static constexpr std::size_t kCrossLayers = 2;

  DcnModel(const BackboneConfig& cfg) : Backbone(BackboneKind::DCN, cfg) {
    Rng rng(cfg.seed);
    const std::size_t w = cfg.concat_width();
    for (std::size_t i = 0; i < kCrossLayers; ++i) {
      params_.add("cross/w" + std::to_string(i), xavier_uniform(w, 1, rng));
      params_.add("cross/b" + std::to_string(i), Tensor::zeros({w}));
    }
    init_mlp_hidden(params_, "deep", w, cfg.hidden_units, cfg.hidden_layers, rng);
    // Combination layer over [cross | deep hidden].
    params_.add("comb/w", xavier_uniform(w + cfg.hidden_units, 1, rng));
    params_.add("comb/b", Tensor::zeros({1}));
  }

  Tensor logit(const Tensor& item, const Tensor& features) const override {
    Tensor x0 = concat({item, features}, 1);
    Tensor x = x0;
    for (std::size_t i = 0; i < kCrossLayers; ++i) {
      x = cross_layer(x0, x, params_.get("cross/w" + std::to_string(i)),
                      params_.get("cross/b" + std::to_string(i)));
    }
    Tensor deep = mlp_hidden(params_, "deep", x0, cfg_.hidden_layers);
    Tensor both = concat({x, deep}, 1);
    return add(matmul(both, params_.get("comb/w")), params_.get("comb/b"));
  }
};

class IpnnModel final : public Backbone {
 public:
  IpnnModel(const BackboneConfig& cfg) : Backbone(BackboneKind::IPNN, cfg) {
    Rng rng(cfg.seed);
    const std::size_t fields = cfg.cat_field_count + 1;
    const std::size_t pairs = fields * (fields - 1) / 2;
    const std::size_t z = cfg.concat_width();
    params_.add("prod/wz", xavier_uniform(z, cfg.hidden_units, rng));
    params_.add("prod/wp", xavier_uniform(std::max<std::size_t>(pairs, 1),
                                          cfg.hidden_units, rng));
    params_.add("prod/b", Tensor::zeros({cfg.hidden_units}));
    init_mlp(params_, "top", cfg.hidden_units, cfg.hidden_units,
             cfg.hidden_layers > 0 ? cfg.hidden_layers - 1 : 0, 1, rng);
  }

  Tensor logit(const Tensor& item, const Tensor& features) const override {
    auto fields = split_fields(item, features, cfg_.embedding_dim,
                               cfg_.cat_field_count);
    std::vector<Tensor> inner;
    for (std::size_t a = 0; a < fields.size(); ++a) {
      for (std::size_t b = a + 1; b < fields.size(); ++b) {
        inner.push_back(rowsum(mul(fields[a], fields[b])));
      }
    }
    Tensor z = concat({item, features}, 1);
    Tensor lz = matmul(z, params_.get("prod/wz"));
    Tensor h1;
    if (!inner.empty()) {
      Tensor p = concat(inner, 1);
      Tensor lp = matmul(p, params_.get("prod/wp"));
      h1 = relu(add(add(lz, lp), params_.get("prod/b")));
    } else {
      h1 = relu(add(lz, params_.get("prod/b")));
    }
    return mlp_logit(params_, "top", h1,
                     cfg_.hidden_layers > 0 ? cfg_.hidden_layers - 1 : 0);
  }
};

class OpnnModel final : public Backbone {
 public:
  OpnnModel(const BackboneConfig& cfg) : Backbone(BackboneKind::OPNN, cfg) {
    Rng rng(cfg.seed);
    const std::size_t d = cfg.embedding_dim;
    const std::size_t z = cfg.concat_width();
    // Outer products compressed through one [d x d] kernel per product unit,
    // applied to the field-sum embedding.
    for (std::size_t u = 0; u < cfg.hidden_units; ++u) {
      params_.add("prod/k" + std::to_string(u), xavier_uniform(d, d, rng));
    }
    params_.add("prod/wz", xavier_uniform(z, cfg.hidden_units, rng));
    params_.add("prod/b", Tensor::zeros({cfg.hidden_units}));
    init_mlp(params_, "top", cfg.hidden_units, cfg.hidden_units,
             cfg.hidden_layers > 0 ? cfg.hidden_layers - 1 : 0, 1, rng);
  }

  Tensor logit(const Tensor& item, const Tensor& features) const override {
    auto fields = split_fields(item, features, cfg_.embedding_dim,
                               cfg_.cat_field_count);
    Tensor fsum = fields[0];
    for (std::size_t f = 1; f < fields.size(); ++f) fsum = add(fsum, fields[f]);

    std::vector<Tensor> units;
    units.reserve(cfg_.hidden_units);
    for (std::size_t u = 0; u < cfg_.hidden_units; ++u) {
      Tensor k = params_.get("prod/k" + std::to_string(u));
      units.push_back(rowsum(mul(matmul(fsum, k), fsum)));
    }
    Tensor lp = concat(units, 1);
    Tensor z = concat({item, features}, 1);
    Tensor lz = matmul(z, params_.get("prod/wz"));
    Tensor h1 = relu(add(add(lz, lp), params_.get("prod/b")));
    return mlp_logit(params_, "top", h1,
                     cfg_.hidden_layers > 0 ? cfg_.hidden_layers - 1 : 0);
  }
};

}  // namespace

std::unique_ptr<Backbone> make_backbone(BackboneKind kind, const BackboneConfig& cfg) {
  if (cfg.embedding_dim == 0) throw ArgumentError("embedding_dim must be positive");
  switch (kind) {
    case BackboneKind::FM: return std::make_unique<FmModel>(cfg);
    case BackboneKind::DeepFM: return std::make_unique<DeepFmModel>(cfg);
    case BackboneKind::WideDeep: return std::make_unique<WideDeepModel>(cfg);
    case BackboneKind::DCN: return std::make_unique<DcnModel>(cfg);
    case BackboneKind::IPNN: return std::make_unique<IpnnModel>(cfg);
    case BackboneKind::OPNN: return std::make_unique<OpnnModel>(cfg);
  }
  throw ArgumentError("unknown backbone kind");
}

}  // namespace cvar
