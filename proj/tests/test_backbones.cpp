#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cvar/adam.hpp"
#include "cvar/backbone.hpp"
#include "cvar/errors.hpp"
#include "cvar/rng.hpp"

using namespace cvar;

namespace {

void zero_all(ParameterStore& store) {
  store.for_each([](const std::string&, Tensor& t, bool) {
    auto v = t.values_mut();
    std::fill(v.begin(), v.end(), 0.0);
  });
}

void zero_param(ParameterStore& store, const std::string& name) {
  auto v = store.get(name).values_mut();
  std::fill(v.begin(), v.end(), 0.0);
}

BackboneConfig small_config(std::uint64_t seed = 3) {
  BackboneConfig cfg;
  cfg.embedding_dim = 4;
  cfg.cat_field_count = 2;
  cfg.cont_field_count = 1;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("all kinds output 0.5 with zeroed parameters and inputs") {
  Rng rng(7);
  const BackboneConfig cfg = small_config();
  Tensor item = Tensor::zeros({3, cfg.embedding_dim});
  Tensor features = Tensor::zeros({3, cfg.feature_width()});
  for (BackboneKind kind : all_backbone_kinds()) {
    auto model = make_backbone(kind, cfg);
    zero_all(model->params());
    Tensor out = model->forward(item, features);
    for (double y : out.values()) CHECK(y == 0.5);
  }
}

TEST_CASE("fm second-order term by hand") {
  BackboneConfig cfg;
  cfg.embedding_dim = 2;
  cfg.cat_field_count = 1;
  cfg.cont_field_count = 0;
  auto fm = make_backbone(BackboneKind::FM, cfg);
  zero_all(fm->params());  // zero linear terms and bias

  // Orthogonal factors: interaction 0, score 0.5.
  Tensor item({1, 2}, {1, 0});
  Tensor features({1, 2}, {0, 1});
  CHECK(fm->forward(item, features).values()[0] == 0.5);

  // <[1,1],[1,1]> = 2 -> sigmoid(2)
  Tensor item2({1, 2}, {1, 1});
  Tensor features2({1, 2}, {1, 1});
  CHECK(fm->forward(item2, features2).values()[0] ==
        doctest::Approx(0.8807970779778823).epsilon(1e-12));
}

TEST_CASE("forward validates widths") {
  const BackboneConfig cfg = small_config();
  auto model = make_backbone(BackboneKind::DeepFM, cfg);
  Tensor bad_item = Tensor::zeros({3, cfg.embedding_dim + 1});
  Tensor features = Tensor::zeros({3, cfg.feature_width()});
  CHECK_THROWS_AS(model->forward(bad_item, features), DimensionError);
  Tensor item = Tensor::zeros({3, cfg.embedding_dim});
  Tensor bad_features = Tensor::zeros({3, cfg.feature_width() + 2});
  CHECK_THROWS_AS(model->forward(item, bad_features), DimensionError);
}

TEST_CASE("the item slot accepts any tensor of the right shape") {
  Rng rng(19);
  const BackboneConfig cfg = small_config();
  Tensor features = Tensor::random_normal({5, cfg.feature_width()}, rng, 0.3);
  for (BackboneKind kind : all_backbone_kinds()) {
    auto model = make_backbone(kind, cfg);
    for (int trial = 0; trial < 3; ++trial) {
      Tensor random_item = Tensor::random_normal({5, cfg.embedding_dim}, rng);
      Tensor out = model->forward(random_item, features);
      for (double y : out.values()) {
        CHECK(y > 0.0);
        CHECK(y < 1.0);
        CHECK(std::isfinite(y));
      }
    }
  }
}

TEST_CASE("deepfm with a zeroed deep tower equals fm exactly") {
  Rng rng(4);
  const BackboneConfig cfg = small_config(11);
  auto deepfm = make_backbone(BackboneKind::DeepFM, cfg);
  zero_param(deepfm->params(), "deep/wout");
  zero_param(deepfm->params(), "deep/bout");

  auto fm = make_backbone(BackboneKind::FM, cfg);
  fm->params().copy_values_from(deepfm->params());  // shared fm/w, fm/b names

  Tensor item = Tensor::random_normal({6, cfg.embedding_dim}, rng, 0.5);
  Tensor features = Tensor::random_normal({6, cfg.feature_width()}, rng, 0.5);
  Tensor a = deepfm->forward(item, features);
  Tensor b = fm->forward(item, features);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.values()[i] == b.values()[i]);
  }
}

TEST_CASE("wide&deep with a zeroed deep tower reduces to its wide part") {
  Rng rng(6);
  const BackboneConfig cfg = small_config(13);
  auto model = make_backbone(BackboneKind::WideDeep, cfg);
  zero_param(model->params(), "deep/wout");
  zero_param(model->params(), "deep/bout");

  Tensor item = Tensor::random_normal({4, cfg.embedding_dim}, rng, 0.5);
  Tensor features = Tensor::random_normal({4, cfg.feature_width()}, rng, 0.5);
  Tensor out = model->forward(item, features);

  Tensor wide = sigmoid(nets::linear_logit(model->params(), "wide",
                                           concat({item, features}, 1)));
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out.values()[i] == wide.values()[i]);
  }
}

TEST_CASE("cross layer with zero weights is the identity plus bias") {
  Rng rng(9);
  Tensor x0 = Tensor::random_normal({3, 5}, rng);
  Tensor w = Tensor::zeros({5, 1});
  Tensor b = Tensor::zeros({5});
  Tensor out = nets::cross_layer(x0, x0, w, b);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out.values()[i] == x0.values()[i]);
  }

  Tensor b2 = Tensor::full({5}, 0.25);
  Tensor out2 = nets::cross_layer(x0, x0, w, b2);
  for (std::size_t i = 0; i < out2.size(); ++i) {
    CHECK(out2.values()[i] == doctest::Approx(x0.values()[i] + 0.25));
  }
}

TEST_CASE("ipnn and opnn reduce to a plain mlp when the product path is zeroed") {
  Rng rng(23);
  const BackboneConfig cfg = small_config(17);
  Tensor item = Tensor::random_normal({4, cfg.embedding_dim}, rng, 0.4);
  Tensor features = Tensor::random_normal({4, cfg.feature_width()}, rng, 0.4);
  Tensor z = concat({item, features}, 1);

  {
    auto ipnn = make_backbone(BackboneKind::IPNN, cfg);
    zero_param(ipnn->params(), "prod/wp");
    Tensor got = ipnn->forward(item, features);

    const ParameterStore& p = ipnn->params();
    Tensor h1 = relu(add(matmul(z, p.get("prod/wz")), p.get("prod/b")));
    Tensor expect = sigmoid(nets::mlp_logit(p, "top", h1, cfg.hidden_layers - 1));
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got.values()[i] == expect.values()[i]);
    }
  }
  {
    auto opnn = make_backbone(BackboneKind::OPNN, cfg);
    for (std::size_t u = 0; u < cfg.hidden_units; ++u) {
      zero_param(opnn->params(), "prod/k" + std::to_string(u));
    }
    Tensor got = opnn->forward(item, features);

    const ParameterStore& p = opnn->params();
    Tensor h1 = relu(add(matmul(z, p.get("prod/wz")), p.get("prod/b")));
    Tensor expect = sigmoid(nets::mlp_logit(p, "top", h1, cfg.hidden_layers - 1));
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got.values()[i] == expect.values()[i]);
    }
  }
}

TEST_CASE("bce loss hand values") {
  Tensor half({1}, {0.5});
  Tensor one({1}, {1.0});
  CHECK(bce_loss(half, one).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Tensor near({1}, {0.999999});
  CHECK(bce_loss(near, one).item() < 1e-5);

  Tensor batch({2}, {0.9, 0.1});
  Tensor labels({2}, {1.0, 0.0});
  CHECK(bce_loss(batch, labels).item() ==
        doctest::Approx(0.10536051565782628).epsilon(1e-10));
}

TEST_CASE("200 adam steps separate a linearly separable batch") {
  // Class signal lives in the feature concat; item vectors are noise.
  Rng rng(31);
  const BackboneConfig cfg = small_config(29);
  const std::size_t B = 64;

  std::vector<double> feat(B * cfg.feature_width());
  std::vector<double> label(B);
  for (std::size_t r = 0; r < B; ++r) {
    const double cls = (r % 2 == 0) ? 1.0 : 0.0;
    label[r] = cls;
    for (std::size_t c = 0; c < cfg.feature_width(); ++c) {
      feat[r * cfg.feature_width() + c] = (cls > 0.5 ? 0.5 : -0.5) + rng.normal(0, 0.02);
    }
  }
  Tensor features({B, cfg.feature_width()}, feat);
  Tensor item = Tensor::random_normal({B, cfg.embedding_dim}, rng, 0.05);
  Tensor labels({B}, label);

  for (BackboneKind kind : all_backbone_kinds()) {
    auto model = make_backbone(kind, cfg);
    Adam opt({.learning_rate = 0.05});
    double last = 0.0;
    for (int step = 0; step < 200; ++step) {
      Tensor loss = bce_loss(model->forward(item, features), labels);
      loss.backward();
      opt.step(model->params());
      last = loss.item();
    }
    INFO("backbone ", to_string(kind), " final bce ", last);
    CHECK(last < 0.1);
  }
}
