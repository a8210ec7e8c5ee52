#include "cvar/adam.hpp"

#include <cmath>

#include "cvar/errors.hpp"

namespace cvar {

void Adam::step(ParameterStore& params, const SparseRows* sparse) {
  step_ += 1;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));

  params.for_each([&](const std::string& name, Tensor& t, bool frozen) {
    if (frozen) return;
    if (!t.has_grad()) {
      throw StateError("adam step on parameter without gradient: " + name);
    }
    auto& mv = moments_[name];
    if (mv.m.size() != t.size()) {
      mv.m.assign(t.size(), 0.0);
      mv.v.assign(t.size(), 0.0);
    }
    auto w = t.values_mut();
    const auto g = t.grad();

    auto update_range = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        mv.m[i] = cfg_.beta1 * mv.m[i] + (1.0 - cfg_.beta1) * g[i];
        mv.v[i] = cfg_.beta2 * mv.v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
        const double mhat = mv.m[i] / bc1;
        const double vhat = mv.v[i] / bc2;
        w[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
      }
    };

    const std::vector<std::size_t>* rows = nullptr;
    if (sparse) {
      auto it = sparse->find(name);
      if (it != sparse->end()) rows = &it->second;
    }
    if (rows) {
      const std::size_t row_width = t.size() / t.shape().front();
      for (std::size_t r : *rows) {
        update_range(r * row_width, (r + 1) * row_width);
      }
    } else {
      update_range(0, t.size());
    }
    t.clear_grad();
  });
}

void Adam::export_state(const std::string& prefix, ParameterStore& out) const {
  for (const auto& [name, mv] : moments_) {
    out.add(prefix + name + "/m", Tensor({mv.m.size()}, mv.m));
    out.add(prefix + name + "/v", Tensor({mv.v.size()}, mv.v));
  }
}

void Adam::import_state(const std::string& prefix, const ParameterStore& in,
                        std::size_t step_count) {
  moments_.clear();
  step_ = step_count;
  for (const std::string& name : in.names()) {
    if (name.rfind(prefix, 0) != 0) continue;
    const std::string rest = name.substr(prefix.size());
    if (rest.size() < 2) continue;
    const bool is_m = rest.compare(rest.size() - 2, 2, "/m") == 0;
    const bool is_v = rest.compare(rest.size() - 2, 2, "/v") == 0;
    if (!is_m && !is_v) continue;
    const std::string param = rest.substr(0, rest.size() - 2);
    const auto vals = in.get(name).values();
    auto& mv = moments_[param];
    auto& dst = is_m ? mv.m : mv.v;
    dst.assign(vals.begin(), vals.end());
  }
}

}  // namespace cvar
