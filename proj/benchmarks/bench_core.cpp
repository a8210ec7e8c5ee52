#include <benchmark/benchmark.h>

#include "cvar/adam.hpp"
#include "cvar/backbone.hpp"
#include "cvar/dataset.hpp"
#include "cvar/embedding.hpp"
#include "cvar/rng.hpp"
#include "cvar/schema.hpp"
#include "cvar/warmup.hpp"

using namespace cvar;

namespace {

void BM_MatmulForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor a = Tensor::random_normal({2048, n}, rng);
  Tensor b = Tensor::random_normal({n, 16}, rng);
  for (auto _ : state) {
    Tensor out = matmul(a, b);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetItemsProcessed(state.iterations() * 2048 * n * 16);
}
BENCHMARK(BM_MatmulForward)->Arg(32)->Arg(128)->Arg(512);

void BM_MlpTrainStep(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  ParameterStore store;
  nets::init_mlp(store, "mlp", width, 16, 2, 1, rng);
  Tensor x = Tensor::random_normal({2048, width}, rng, 0.3);
  Tensor labels = Tensor::zeros({2048});
  {
    auto v = labels.values_mut();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i % 2;
  }
  Adam opt;
  for (auto _ : state) {
    Tensor pred = sigmoid(reshape(nets::mlp_logit(store, "mlp", x, 2), {2048}));
    bce_loss(pred, labels).backward();
    opt.step(store);
  }
}
BENCHMARK(BM_MlpTrainStep)->Arg(64)->Arg(128);

void BM_BackboneForward(benchmark::State& state) {
  const auto kind = static_cast<BackboneKind>(state.range(0));
  BackboneConfig cfg;
  cfg.embedding_dim = 16;
  cfg.cat_field_count = 6;
  cfg.cont_field_count = 1;
  cfg.seed = 3;
  auto model = make_backbone(kind, cfg);
  Rng rng(4);
  Tensor item = Tensor::random_normal({2048, 16}, rng, 0.1);
  Tensor features = Tensor::random_normal({2048, cfg.feature_width()}, rng, 0.1);
  for (auto _ : state) {
    Tensor out = model->forward(item, features);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_BackboneForward)->DenseRange(0, 5, 1);

void BM_AdamStep(benchmark::State& state) {
  const bool sparse = state.range(0) != 0;
  Rng rng(5);
  ParameterStore store;
  Tensor& table = store.add("emb", Tensor::random_normal({4000, 16}, rng, 0.01));
  Tensor coeff = Tensor::random_normal({4000 * 16}, rng);
  Adam opt;
  Adam::SparseRows rows{{"emb", {}}};
  for (std::size_t r = 0; r < 128; ++r) rows["emb"].push_back(r * 31 % 4000);
  for (auto _ : state) {
    sum(mul(reshape(table, {4000 * 16}), coeff)).backward();
    opt.step(store, sparse ? &rows : nullptr);
  }
  state.SetLabel(sparse ? "sparse128" : "dense");
}
BENCHMARK(BM_AdamStep)->Arg(0)->Arg(1);

void BM_EncodeEmbed(benchmark::State& state) {
  InteractionTable table = make_synthetic(
      {.items = 1000, .users = 2000, .interactions = 50000, .seed = 6});
  std::vector<std::size_t> all(table.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  FeatureSchema schema = build_schema(table, all, {.embedding_dim = 16});
  FrequencyTable freq(table.item_count, FrequencyTable::max_item_count(table));
  freq.add_rows(table, all);
  ParameterStore tables;
  Rng rng(7);
  init_embedding_tables(tables, schema, rng);
  std::vector<std::size_t> rows(2048);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  for (auto _ : state) {
    SampleBatch batch = encode_batch(table, rows, schema, freq);
    EmbeddingBundle bundle = embed(batch, tables, schema);
    benchmark::DoNotOptimize(bundle.features.values().data());
  }
}
BENCHMARK(BM_EncodeEmbed);

void BM_WarmLossStep(benchmark::State& state) {
  BackboneConfig bcfg;
  bcfg.embedding_dim = 16;
  bcfg.cat_field_count = 6;
  bcfg.cont_field_count = 1;
  bcfg.seed = 8;
  auto backbone = make_backbone(BackboneKind::DeepFM, bcfg);
  WarmupConfig wcfg;
  wcfg.item_dim = 16;
  wcfg.side_width = 33;
  wcfg.seed = 9;
  WarmupModel model(wcfg);
  Rng rng(10);
  Tensor item = Tensor::random_normal({2048, 16}, rng, 0.1);
  Tensor side = Tensor::random_normal({2048, 33}, rng, 0.1);
  Tensor features = Tensor::random_normal({2048, bcfg.feature_width()}, rng, 0.1);
  Tensor freq = Tensor::full({2048, 1}, 0.4);
  Tensor labels = Tensor::zeros({2048});
  {
    auto v = labels.values_mut();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i % 2;
  }
  Adam opt;
  Rng noise(11);
  for (auto _ : state) {
    GradFreezeGuard guard({&backbone->params()});
    WarmLossBreakdown wl = warm_loss(model, *backbone, item, side, features,
                                     freq, labels, noise);
    wl.total.backward();
    opt.step(model.params());
  }
}
BENCHMARK(BM_WarmLossStep);

}  // namespace

BENCHMARK_MAIN();
