#include "cvar/param_store.hpp"

#include <cstring>

#include "cvar/errors.hpp"

namespace cvar {

Tensor& ParameterStore::add(const std::string& name, Tensor t) {
  auto [it, inserted] = entries_.emplace(name, Entry{std::move(t), false});
  if (!inserted) throw ArgumentError("duplicate parameter name: " + name);
  it->second.tensor.set_requires_grad(true);
  return it->second.tensor;
}

Tensor& ParameterStore::get(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ArgumentError("unknown parameter: " + name);
  return it->second.tensor;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ArgumentError("unknown parameter: " + name);
  return it->second.tensor;
}

bool ParameterStore::contains(const std::string& name) const {
  return entries_.count(name) != 0;
}

void ParameterStore::set_frozen(const std::string& name, bool frozen) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ArgumentError("unknown parameter: " + name);
  it->second.frozen = frozen;
}

bool ParameterStore::frozen(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ArgumentError("unknown parameter: " + name);
  return it->second.frozen;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::value_count() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.tensor.size();
  return n;
}

void ParameterStore::zero_grads() {
  for (auto& [_, e] : entries_) e.tensor.zero_grad();
}

void ParameterStore::clear_grads() {
  for (auto& [_, e] : entries_) e.tensor.clear_grad();
}

void ParameterStore::set_requires_grad(bool v) {
  for (auto& [_, e] : entries_) e.tensor.set_requires_grad(v);
}

std::uint64_t ParameterStore::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [name, e] : entries_) {
    mix(name.data(), name.size());
    const auto v = e.tensor.values();
    mix(v.data(), v.size() * sizeof(double));
  }
  return h;
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  for (auto& [name, e] : entries_) {
    if (!other.contains(name)) continue;
    const Tensor& src = other.get(name);
    if (src.shape() != e.tensor.shape()) {
      throw DimensionError("parameter " + name + " shape mismatch: " +
                           shape_string(src.shape()) + " vs " +
                           shape_string(e.tensor.shape()));
    }
    auto dst = e.tensor.values_mut();
    const auto sv = src.values();
    std::memcpy(dst.data(), sv.data(), sv.size() * sizeof(double));
  }
}

GradFreezeGuard::GradFreezeGuard(std::vector<ParameterStore*> stores)
    : stores_(std::move(stores)) {
  saved_.reserve(stores_.size());
  for (ParameterStore* s : stores_) {
    std::vector<bool> flags;
    s->for_each([&flags](const std::string&, const Tensor& t, bool) {
      flags.push_back(t.requires_grad());
    });
    saved_.push_back(std::move(flags));
    s->set_requires_grad(false);
  }
}

GradFreezeGuard::~GradFreezeGuard() {
  for (std::size_t i = 0; i < stores_.size(); ++i) {
    std::size_t j = 0;
    auto& flags = saved_[i];
    stores_[i]->for_each([&flags, &j](const std::string&, Tensor& t, bool) {
      t.set_requires_grad(flags[j++]);
    });
  }
}

}  // namespace cvar
