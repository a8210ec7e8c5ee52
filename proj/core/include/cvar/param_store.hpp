#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cvar/tensor.hpp"

namespace cvar {

// Named parameter tensors with per-parameter freeze flags. Iteration order
// is the sorted name order, which keeps optimizer passes deterministic.
class ParameterStore {
 public:
  Tensor& add(const std::string& name, Tensor t);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  void set_frozen(const std::string& name, bool frozen);
  bool frozen(const std::string& name) const;

  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }
  std::size_t value_count() const;  // total scalars across parameters

  void zero_grads();
  void clear_grads();
  void set_requires_grad(bool v);

  // FNV-1a over names and raw value bytes; detects any bit-level change.
  std::uint64_t checksum() const;

  // Copies values from another store for the names both contain.
  void copy_values_from(const ParameterStore& other);

  template <typename Fn>
  void for_each(Fn&& fn) {
    for (auto& [name, e] : entries_) fn(name, e.tensor, e.frozen);
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& [name, e] : entries_) fn(name, e.tensor, e.frozen);
  }

 private:
  struct Entry {
    Tensor tensor;
    bool frozen = false;
  };
  std::map<std::string, Entry> entries_;
};

// RAII guard that detaches every parameter in the given stores from
// gradient accumulation, restoring the previous flags on destruction.
// Used to keep backbone and embedding parameters out of the warm-up
// module's backward passes.
class GradFreezeGuard {
 public:
  explicit GradFreezeGuard(std::vector<ParameterStore*> stores);
  ~GradFreezeGuard();
  GradFreezeGuard(const GradFreezeGuard&) = delete;
  GradFreezeGuard& operator=(const GradFreezeGuard&) = delete;

 private:
  std::vector<ParameterStore*> stores_;
  std::vector<std::vector<bool>> saved_;
};

}  // namespace cvar
