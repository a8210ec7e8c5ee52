#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "cvar/param_store.hpp"

namespace cvar {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction and optional per-parameter sparse row updates.
// Moments for rows never touched stay exactly zero, so a sparse step leaves
// untouched rows bit-identical.
class Adam {
 public:
  using SparseRows = std::map<std::string, std::vector<std::size_t>>;

  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Applies one update to every non-frozen parameter with a gradient and
  // clears those gradients. A non-frozen parameter without a gradient is a
  // state error. Parameters listed in `sparse` update only the given rows.
  void step(ParameterStore& params, const SparseRows* sparse = nullptr);

  std::size_t step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  void set_learning_rate(double lr) { cfg_.learning_rate = lr; }

  // Moment buffers exposed for checkpointing.
  void export_state(const std::string& prefix, ParameterStore& out) const;
  void import_state(const std::string& prefix, const ParameterStore& in,
                    std::size_t step_count);

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  AdamConfig cfg_;
  std::size_t step_ = 0;
  std::map<std::string, Moments> moments_;
};

}  // namespace cvar
