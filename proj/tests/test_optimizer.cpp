#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "cvar/adam.hpp"
#include "cvar/checkpoint.hpp"
#include "cvar/errors.hpp"
#include "cvar/rng.hpp"

using namespace cvar;

namespace {

// Drives grad = target via a quadratic loss so tests control gradients exactly.
void set_grad(Tensor& t, const std::vector<double>& g) {
  Tensor coeff({g.size()}, g);
  Tensor flat = reshape(t, {t.size()});
  sum(mul(flat, coeff)).backward();
}

}  // namespace

TEST_CASE("first adam step moves a scalar by about the learning rate") {
  ParameterStore store;
  Tensor& w = store.add("w", Tensor::scalar(0.0));
  set_grad(w, {1.0});

  Adam opt;
  opt.step(store);

  // Hand evaluation at t=1: mhat=1, vhat=1, delta = lr/(1+eps).
  const double expect = -0.001 / (1.0 + 1e-8);
  CHECK(w.values()[0] == doctest::Approx(expect).epsilon(1e-12));
  CHECK(std::abs(w.values()[0] + 0.001) < 1e-9);
  CHECK(opt.step_count() == 1);
  CHECK_FALSE(w.has_grad());  // cleared after step
}

TEST_CASE("frozen parameters are bit-identical after a step") {
  ParameterStore store;
  Tensor& w = store.add("w", Tensor({2}, {0.25, -1.5}));
  store.set_frozen("w", true);
  set_grad(w, {3.0, -2.0});

  const double before[2] = {w.values()[0], w.values()[1]};
  Adam opt;
  opt.step(store);
  CHECK(std::memcmp(before, w.values().data(), sizeof(before)) == 0);
}

TEST_CASE("step on a gradient-less unfrozen parameter is a state error") {
  ParameterStore store;
  store.add("w", Tensor::scalar(1.0));
  Adam opt;
  CHECK_THROWS_AS(opt.step(store), StateError);
}

TEST_CASE("sparse step touches only the listed rows") {
  ParameterStore store;
  Tensor& table = store.add("emb", Tensor::zeros({10, 4}));
  {
    auto v = table.values_mut();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  }
  std::vector<double> g(40, 1.0);
  set_grad(table, g);

  std::vector<double> before(table.values().begin(), table.values().end());
  Adam opt;
  Adam::SparseRows rows{{"emb", {3}}};
  opt.step(store, &rows);

  for (std::size_t r = 0; r < 10; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      const double now = table.values()[r * 4 + c];
      if (r == 3) {
        CHECK(now != before[r * 4 + c]);
      } else {
        CHECK(std::memcmp(&now, &before[r * 4 + c], sizeof(double)) == 0);
      }
    }
  }
}

TEST_CASE("sparse step over the full row set equals the dense step") {
  auto make = [](ParameterStore& store) -> Tensor& {
    Rng rng(21);
    return store.add("emb", Tensor::random_normal({6, 3}, rng, 0.5));
  };
  ParameterStore dense_store, sparse_store;
  Tensor& a = make(dense_store);
  Tensor& b = make(sparse_store);

  Rng grng(7);
  for (int iter = 0; iter < 5; ++iter) {
    std::vector<double> g(18);
    for (double& x : g) x = grng.normal();
    set_grad(a, g);
    set_grad(b, g);

    Adam da, db;
    da.step(dense_store);
    Adam::SparseRows rows{{"emb", {0, 1, 2, 3, 4, 5}}};
    db.step(sparse_store, &rows);
  }
  for (std::size_t i = 0; i < 18; ++i) {
    CHECK(a.values()[i] == doctest::Approx(b.values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("checkpoint round-trip is bit-exact and carries metadata") {
  Rng rng(33);
  ParameterStore store;
  store.add("layer/w", Tensor::random_normal({7, 3}, rng));
  store.add("layer/b", Tensor::random_normal({3}, rng));
  store.set_frozen("layer/b", true);

  const auto path = std::filesystem::temp_directory_path() / "cvar_ckpt_test.bin";
  save_checkpoint(path.string(), store, {{"kind", "test"}, {"k", "16"}});

  std::map<std::string, std::string> meta;
  ParameterStore loaded = read_checkpoint(path.string(), &meta);
  CHECK(meta.at("kind") == "test");
  CHECK(meta.at("k") == "16");
  CHECK(loaded.frozen("layer/b"));
  CHECK(loaded.checksum() == store.checksum());

  // In-place load into matching shapes.
  ParameterStore target;
  target.add("layer/w", Tensor::zeros({7, 3}));
  target.add("layer/b", Tensor::zeros({3}));
  load_checkpoint(path.string(), target);
  CHECK(target.get("layer/w").values()[5] == store.get("layer/w").values()[5]);

  // Shape mismatch refuses to load.
  ParameterStore bad;
  bad.add("layer/w", Tensor::zeros({7, 2}));
  bad.add("layer/b", Tensor::zeros({3}));
  CHECK_THROWS_AS(load_checkpoint(path.string(), bad), DimensionError);

  std::filesystem::remove(path);
}

TEST_CASE("checkpoint rejects files with a bad magic header") {
  const auto path = std::filesystem::temp_directory_path() / "cvar_not_ckpt.bin";
  {
    std::ofstream os(path);
    os << "definitely not a checkpoint";
  }
  CHECK_THROWS_AS(read_checkpoint(path.string()), IoError);
  std::filesystem::remove(path);
}

TEST_CASE("adam moments export and import reproduce the trajectory") {
  auto train_steps = [](ParameterStore& s, Adam& opt, int n) {
    Tensor& w = s.get("w");
    for (int i = 0; i < n; ++i) {
      set_grad(w, {0.5, -(1.0 + i)});
      opt.step(s);
    }
  };

  ParameterStore full;
  full.add("w", Tensor({2}, {1.0, 1.0}));
  Adam opt_full;
  train_steps(full, opt_full, 6);

  // Same run, but checkpointed after 3 steps and resumed.
  ParameterStore part;
  part.add("w", Tensor({2}, {1.0, 1.0}));
  Adam opt_a;
  train_steps(part, opt_a, 3);

  ParameterStore saved;
  opt_a.export_state("opt/", saved);
  Adam opt_b;
  opt_b.import_state("opt/", saved, opt_a.step_count());

  // Remaining gradients continue the same schedule (i = 3, 4, 5).
  Tensor& w = part.get("w");
  for (int i = 3; i < 6; ++i) {
    set_grad(w, {0.5, -(1.0 + i)});
    opt_b.step(part);
  }

  CHECK(part.get("w").values()[0] ==
        doctest::Approx(full.get("w").values()[0]).epsilon(1e-15));
  CHECK(part.get("w").values()[1] ==
        doctest::Approx(full.get("w").values()[1]).epsilon(1e-15));
}

TEST_CASE("grad freeze guard blocks accumulation and restores flags") {
  ParameterStore store;
  Tensor& w = store.add("w", Tensor({2}, {1.0, 2.0}));
  Tensor x({2}, {3.0, 4.0}, true);

  {
    GradFreezeGuard guard({&store});
    Tensor loss = sum(mul(w, x));
    loss.backward();
    CHECK_FALSE(w.has_grad());
    CHECK(x.grad()[0] == 1.0);  // gradient still flows to tracked inputs
  }
  CHECK(w.requires_grad());

  sum(mul(w, x)).backward();
  CHECK(w.has_grad());
}
