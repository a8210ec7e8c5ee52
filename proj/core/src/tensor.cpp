#include "cvar/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include "cvar/errors.hpp"
#include "cvar/rng.hpp"

namespace cvar {

namespace {

std::size_t numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::atomic<std::uint64_t> g_backward_epoch{0};

}  // namespace

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

// ---- Tensor basics ----------------------------------------------------

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data,
               bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive");
  }
  if (numel(shape) != data.size()) {
    throw DimensionError("shape " + shape_string(shape) + " expects " +
                         std::to_string(numel(shape)) + " values, got " +
                         std::to_string(data.size()));
  }
  node_ = std::make_shared<detail::Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  std::vector<double> data(numel(shape), 0.0);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v, bool requires_grad) {
  std::vector<double> data(numel(shape), v);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return Tensor({1}, {v}, requires_grad);
}

Tensor Tensor::random_normal(std::vector<std::size_t> shape, Rng& rng,
                             double stddev, bool requires_grad) {
  std::vector<double> data(numel(shape));
  for (double& x : data) x = rng.normal(0.0, stddev);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

const std::vector<std::size_t>& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->value.size(); }

std::size_t Tensor::rows() const {
  return node_->shape.empty() ? 1 : node_->shape.front();
}

std::size_t Tensor::cols() const {
  return node_->shape.empty() ? 1 : node_->shape.back();
}

std::span<const double> Tensor::values() const { return node_->value; }
std::span<double> Tensor::values_mut() { return node_->value; }

double Tensor::item() const {
  if (size() != 1) {
    throw ArgumentError("item() requires a scalar tensor, got shape " +
                        shape_string(shape()));
  }
  return node_->value[0];
}

bool Tensor::requires_grad() const { return node_->requires_grad; }
void Tensor::set_requires_grad(bool v) { node_->requires_grad = v; }
bool Tensor::has_grad() const { return !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw StateError("tensor has no gradient");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::clear_grad() { node_->grad.clear(); }

std::uintptr_t Tensor::id() const {
  return reinterpret_cast<std::uintptr_t>(node_.get());
}

// ---- op plumbing ------------------------------------------------------

Tensor make_op_result(std::vector<std::size_t> shape, std::vector<double> value,
                      std::vector<Tensor> parents,
                      std::function<void(detail::Node&)> backward_fn) {
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->parents.reserve(parents.size());
  for (const Tensor& p : parents) n->parents.push_back(p.node_);
  n->backward_fn = std::move(backward_fn);
  return Tensor(std::move(n));
}

void Tensor::backward() const {
  if (!node_) throw StateError("backward on an undefined tensor");
  if (size() != 1) {
    throw ArgumentError("backward requires a scalar loss, got shape " +
                        shape_string(shape()));
  }
  const std::uint64_t epoch = ++g_backward_epoch;

  // Post-order DFS; marks nodes whose subtree contains a requires_grad leaf.
  std::vector<detail::Node*> order;
  {
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    node_->epoch = epoch;
    node_->active = false;
    while (!stack.empty()) {
      auto& [n, next_child] = stack.back();
      if (next_child < n->parents.size()) {
        detail::Node* p = n->parents[next_child++].get();
        if (p && p->epoch != epoch) {
          p->epoch = epoch;
          p->active = false;
          stack.emplace_back(p, 0);
        }
        continue;
      }
      bool active = n->requires_grad;
      for (const auto& p : n->parents) {
        if (p && p->active) active = true;
      }
      n->active = active;
      if (active) order.push_back(n);
      stack.pop_back();
    }
  }

  if (!node_->active) {
    throw StateError("loss is not connected to any gradient-tracked tensor");
  }
  // Interior node grads are per-pass scratch; only requires_grad tensors
  // accumulate across backward calls.
  for (detail::Node* n : order) {
    if (n->backward_fn && !n->requires_grad) {
      n->grad.assign(n->value.size(), 0.0);
    } else {
      n->ensure_grad();
    }
  }
  node_->grad[0] += 1.0;

  // order is post-order, so children come after their parents when walked
  // back to front.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

namespace {

bool node_active(const std::shared_ptr<detail::Node>& n) {
  return n && n->active;
}

void accumulate(detail::Node& dst, std::size_t i, double v) {
  dst.grad[i] += v;
}

}  // namespace

// ---- matmul -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2) {
    throw DimensionError("matmul expects 2-d tensors, got " +
                         shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1];
  const std::size_t k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2) {
    throw DimensionError("matmul inner dimensions disagree: " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  {
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double aik = av[i * k + kk];
        if (aik == 0.0) continue;
        const double* brow = &bv[kk * n];
        double* orow = &out[i * n];
        for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
      }
    }
  }
  return make_op_result(
      {m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        const auto& g = self.grad;
        if (node_active(pa)) {
          pa->ensure_grad();
          const auto& bv = pb->value;
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
              const double gij = g[i * n + j];
              if (gij == 0.0) continue;
              const double* brow = &bv[0] + j;
              for (std::size_t kk = 0; kk < k; ++kk) {
                pa->grad[i * k + kk] += gij * brow[kk * n];
              }
            }
          }
        }
        if (node_active(pb)) {
          pb->ensure_grad();
          const auto& av = pa->value;
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t kk = 0; kk < k; ++kk) {
              const double aik = av[i * k + kk];
              if (aik == 0.0) continue;
              const double* grow = &g[i * n];
              double* brow = &pb->grad[kk * n];
              for (std::size_t j = 0; j < n; ++j) brow[j] += aik * grow[j];
            }
          }
        }
      });
}

// ---- binary elementwise with broadcast ---------------------------------

namespace {

enum class Bcast { Same, ScalarA, ScalarB, TrailA, TrailB };

bool is_trailing_of(const std::vector<std::size_t>& small,
                    const std::vector<std::size_t>& big) {
  if (small.size() >= big.size()) return false;
  const std::size_t off = big.size() - small.size();
  for (std::size_t i = 0; i < small.size(); ++i) {
    if (small[i] != big[off + i]) return false;
  }
  return true;
}

Bcast resolve_broadcast(const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return Bcast::Same;
  if (b.size() == 1) return Bcast::ScalarB;
  if (a.size() == 1) return Bcast::ScalarA;
  if (is_trailing_of(b.shape(), a.shape())) return Bcast::TrailB;
  if (is_trailing_of(a.shape(), b.shape())) return Bcast::TrailA;
  throw DimensionError("incompatible broadcast: " + shape_string(a.shape()) +
                       " vs " + shape_string(b.shape()));
}

template <typename Fwd, typename Bwd>
Tensor binary_op(const Tensor& a, const Tensor& b, Fwd fwd, Bwd bwd) {
  const Bcast kind = resolve_broadcast(a, b);
  const bool a_big = (kind != Bcast::ScalarA && kind != Bcast::TrailA);
  const Tensor& big = a_big ? a : b;
  const std::size_t n = big.size();
  const std::size_t an = a.size(), bn = b.size();

  std::vector<double> out(n);
  {
    const auto av = a.values();
    const auto bv = b.values();
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = fwd(av[i % an], bv[i % bn]);
    }
  }
  return make_op_result(
      big.shape(), std::move(out), {a, b}, [n, an, bn, bwd](detail::Node& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        const bool wa = node_active(pa);
        const bool wb = node_active(pb);
        if (wa) pa->ensure_grad();
        if (wb) pb->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
          const double g = self.grad[i];
          if (g == 0.0) continue;
          const double x = pa->value[i % an];
          const double y = pb->value[i % bn];
          double dx, dy;
          bwd(x, y, g, dx, dy);
          if (wa) accumulate(*pa, i % an, dx);
          if (wb) accumulate(*pb, i % bn, dy);
        }
      });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x + y; },
      [](double, double, double g, double& dx, double& dy) {
        dx = g;
        dy = g;
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x - y; },
      [](double, double, double g, double& dx, double& dy) {
        dx = g;
        dy = -g;
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x * y; },
      [](double x, double y, double g, double& dx, double& dy) {
        dx = g * y;
        dy = g * x;
      });
}

// ---- unary elementwise --------------------------------------------------

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& x, Fwd fwd, Bwd bwd) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  const auto xv = x.values();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(xv[i]);
  return make_op_result(x.shape(), std::move(out), {x},
                        [n, bwd](detail::Node& self) {
                          auto& p = self.parents[0];
                          if (!node_active(p)) return;
                          p->ensure_grad();
                          for (std::size_t i = 0; i < n; ++i) {
                            const double g = self.grad[i];
                            if (g == 0.0) continue;
                            p->grad[i] += g * bwd(p->value[i], self.value[i]);
                          }
                        });
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      x, [](double v) { return stable_sigmoid(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& x) {
  return unary_op(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::exp(v); },
      [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (double v : x.values()) {
    if (v <= 0.0) {
      throw DomainError("log requires strictly positive input, got " +
                        std::to_string(v));
    }
  }
  return unary_op(
      x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor square(const Tensor& x) {
  return unary_op(
      x, [](double v) { return v * v; },
      [](double v, double) { return 2.0 * v; });
}

Tensor sqrt(const Tensor& x) {
  for (double v : x.values()) {
    if (v < 0.0) {
      throw DomainError("sqrt requires non-negative input, got " +
                        std::to_string(v));
    }
  }
  return unary_op(
      x, [](double v) { return std::sqrt(v); },
      [](double, double y) { return 0.5 / y; });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (lo > hi) throw ArgumentError("clamp: lo > hi");
  return unary_op(
      x,
      [lo, hi](double v) { return std::min(std::max(v, lo), hi); },
      [lo, hi](double v, double) { return (v > lo && v < hi) ? 1.0 : 0.0; });
}

Tensor scale(const Tensor& x, double c) {
  return unary_op(
      x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

// ---- shape ops ----------------------------------------------------------

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw ArgumentError("concat of an empty tensor list");
  const std::size_t ndim = parts.front().shape().size();
  if (axis >= ndim) throw ArgumentError("concat axis out of range");
  for (const Tensor& t : parts) {
    if (t.shape().size() != ndim) {
      throw DimensionError("concat inputs must share rank");
    }
    for (std::size_t d = 0; d < ndim; ++d) {
      if (d != axis && t.shape()[d] != parts.front().shape()[d]) {
        throw DimensionError("concat shapes disagree off-axis: " +
                             shape_string(parts.front().shape()) + " vs " +
                             shape_string(t.shape()));
      }
    }
  }

  std::vector<std::size_t> shape = parts.front().shape();
  std::size_t axis_total = 0;
  for (const Tensor& t : parts) axis_total += t.shape()[axis];
  shape[axis] = axis_total;

  // Row-major copy. Treat the tensor as [outer, axis, inner].
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= shape[d];
  for (std::size_t d = axis + 1; d < ndim; ++d) inner *= shape[d];

  std::vector<double> out(numel(shape));
  std::vector<std::size_t> axis_sizes(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p) axis_sizes[p] = parts[p].shape()[axis];

  std::size_t axis_off = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto v = parts[p].values();
    const std::size_t a = axis_sizes[p];
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy(v.begin() + o * a * inner, v.begin() + (o + 1) * a * inner,
                out.begin() + (o * axis_total + axis_off) * inner);
    }
    axis_off += a;
  }

  return make_op_result(
      std::move(shape), std::move(out), parts,
      [outer, inner, axis_total, axis_sizes](detail::Node& self) {
        std::size_t axis_off = 0;
        for (std::size_t p = 0; p < self.parents.size(); ++p) {
          auto& par = self.parents[p];
          const std::size_t a = axis_sizes[p];
          if (node_active(par)) {
            par->ensure_grad();
            for (std::size_t o = 0; o < outer; ++o) {
              const double* src =
                  &self.grad[(o * axis_total + axis_off) * inner];
              double* dst = &par->grad[o * a * inner];
              for (std::size_t i = 0; i < a * inner; ++i) dst[i] += src[i];
            }
          }
          axis_off += a;
        }
      });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  if (x.shape().size() != 2) throw DimensionError("slice_cols expects 2-d input");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (begin >= end || end > n) throw ArgumentError("slice_cols range invalid");
  const std::size_t w = end - begin;
  std::vector<double> out(m * w);
  const auto v = x.values();
  for (std::size_t i = 0; i < m; ++i) {
    std::copy(v.begin() + i * n + begin, v.begin() + i * n + end,
              out.begin() + i * w);
  }
  return make_op_result({m, w}, std::move(out), {x},
                        [m, n, begin, w](detail::Node& self) {
                          auto& p = self.parents[0];
                          if (!node_active(p)) return;
                          p->ensure_grad();
                          for (std::size_t i = 0; i < m; ++i) {
                            for (std::size_t j = 0; j < w; ++j) {
                              p->grad[i * n + begin + j] += self.grad[i * w + j];
                            }
                          }
                        });
}

Tensor reshape(const Tensor& x, std::vector<std::size_t> shape) {
  if (numel(shape) != x.size()) {
    throw DimensionError("reshape to " + shape_string(shape) +
                         " changes element count");
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  const std::size_t n = x.size();
  return make_op_result(std::move(shape), std::move(out), {x},
                        [n](detail::Node& self) {
                          auto& p = self.parents[0];
                          if (!node_active(p)) return;
                          p->ensure_grad();
                          for (std::size_t i = 0; i < n; ++i) {
                            p->grad[i] += self.grad[i];
                          }
                        });
}

// ---- reductions -----------------------------------------------------------

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  const std::size_t n = x.size();
  return make_op_result({1}, {s}, {x}, [n](detail::Node& self) {
    auto& p = self.parents[0];
    if (!node_active(p)) return;
    p->ensure_grad();
    const double g = self.grad[0];
    for (std::size_t i = 0; i < n; ++i) p->grad[i] += g;
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor rowsum(const Tensor& x) {
  if (x.shape().size() != 2) throw DimensionError("rowsum expects 2-d input");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  std::vector<double> out(m, 0.0);
  const auto v = x.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i] += v[i * n + j];
  }
  return make_op_result({m, 1}, std::move(out), {x}, [m, n](detail::Node& self) {
    auto& p = self.parents[0];
    if (!node_active(p)) return;
    p->ensure_grad();
    for (std::size_t i = 0; i < m; ++i) {
      const double g = self.grad[i];
      if (g == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) p->grad[i * n + j] += g;
    }
  });
}

Tensor scale_rows(const Tensor& x, const Tensor& s) {
  if (x.shape().size() != 2) throw DimensionError("scale_rows expects 2-d input");
  const std::size_t m = x.shape()[0], n = x.shape()[1];
  if (s.size() != m) {
    throw DimensionError("scale_rows scale must have one entry per row: " +
                         shape_string(x.shape()) + " vs " +
                         shape_string(s.shape()));
  }
  std::vector<double> out(m * n);
  const auto xv = x.values();
  const auto sv = s.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = xv[i * n + j] * sv[i];
  }
  return make_op_result({m, n}, std::move(out), {x, s},
                        [m, n](detail::Node& self) {
                          auto& px = self.parents[0];
                          auto& ps = self.parents[1];
                          const bool wx = node_active(px);
                          const bool ws = node_active(ps);
                          if (wx) px->ensure_grad();
                          if (ws) ps->ensure_grad();
                          for (std::size_t i = 0; i < m; ++i) {
                            for (std::size_t j = 0; j < n; ++j) {
                              const double g = self.grad[i * n + j];
                              if (g == 0.0) continue;
                              if (wx) px->grad[i * n + j] += g * ps->value[i];
                              if (ws) ps->grad[i] += g * px->value[i * n + j];
                            }
                          }
                        });
}

// ---- gathers ---------------------------------------------------------------

Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& rows) {
  if (table.shape().size() != 2) throw DimensionError("gather_rows expects a 2-d table");
  const std::size_t v = table.shape()[0], d = table.shape()[1];
  for (std::size_t r : rows) {
    if (r >= v) {
      throw ArgumentError("gather_rows index " + std::to_string(r) +
                          " out of bounds for table with " + std::to_string(v) +
                          " rows");
    }
  }
  const std::size_t b = rows.size();
  std::vector<double> out(b * d);
  const auto tv = table.values();
  for (std::size_t i = 0; i < b; ++i) {
    std::copy(tv.begin() + rows[i] * d, tv.begin() + (rows[i] + 1) * d,
              out.begin() + i * d);
  }
  return make_op_result({b, d}, std::move(out), {table},
                        [rows, d](detail::Node& self) {
                          auto& p = self.parents[0];
                          if (!node_active(p)) return;
                          p->ensure_grad();
                          for (std::size_t i = 0; i < rows.size(); ++i) {
                            const double* g = &self.grad[i * d];
                            double* dst = &p->grad[rows[i] * d];
                            for (std::size_t j = 0; j < d; ++j) dst[j] += g[j];
                          }
                        });
}

Tensor gather_rows_mean(const Tensor& table,
                        const std::vector<std::size_t>& flat_rows,
                        const std::vector<std::size_t>& offsets) {
  if (table.shape().size() != 2) {
    throw DimensionError("gather_rows_mean expects a 2-d table");
  }
  if (offsets.empty() || offsets.front() != 0 ||
      offsets.back() != flat_rows.size() ||
      !std::is_sorted(offsets.begin(), offsets.end())) {
    throw ArgumentError("gather_rows_mean offsets malformed");
  }
  const std::size_t v = table.shape()[0], d = table.shape()[1];
  for (std::size_t r : flat_rows) {
    if (r >= v) {
      throw ArgumentError("gather_rows_mean index " + std::to_string(r) +
                          " out of bounds for table with " + std::to_string(v) +
                          " rows");
    }
  }
  const std::size_t b = offsets.size() - 1;
  std::vector<double> out(b * d, 0.0);
  const auto tv = table.values();
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t n = offsets[i + 1] - offsets[i];
    if (n == 0) continue;
    for (std::size_t t = offsets[i]; t < offsets[i + 1]; ++t) {
      const double* src = &tv[flat_rows[t] * d];
      for (std::size_t j = 0; j < d; ++j) out[i * d + j] += src[j];
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] *= inv;
  }
  return make_op_result(
      {b, d}, std::move(out), {table}, [flat_rows, offsets, d](detail::Node& self) {
        auto& p = self.parents[0];
        if (!node_active(p)) return;
        p->ensure_grad();
        const std::size_t b = offsets.size() - 1;
        for (std::size_t i = 0; i < b; ++i) {
          const std::size_t n = offsets[i + 1] - offsets[i];
          if (n == 0) continue;
          const double inv = 1.0 / static_cast<double>(n);
          for (std::size_t t = offsets[i]; t < offsets[i + 1]; ++t) {
            double* dst = &p->grad[flat_rows[t] * d];
            const double* g = &self.grad[i * d];
            for (std::size_t j = 0; j < d; ++j) dst[j] += g[j] * inv;
          }
        }
      });
}

// ---- loss -------------------------------------------------------------------

Tensor bce(const Tensor& pred, const Tensor& labels) {
  if (pred.size() != labels.size()) {
    throw DimensionError("bce size mismatch: " + shape_string(pred.shape()) +
                         " vs " + shape_string(labels.shape()));
  }
  constexpr double kEps = 1e-12;
  const std::size_t n = pred.size();
  double total = 0.0;
  const auto pv = pred.values();
  const auto yv = labels.values();
  for (std::size_t i = 0; i < n; ++i) {
    const double p = std::min(std::max(pv[i], kEps), 1.0 - kEps);
    total += -yv[i] * std::log(p) - (1.0 - yv[i]) * std::log(1.0 - p);
  }
  total /= static_cast<double>(n);
  return make_op_result({1}, {total}, {pred, labels}, [n](detail::Node& self) {
    auto& pp = self.parents[0];
    auto& py = self.parents[1];
    if (!node_active(pp)) return;
    pp->ensure_grad();
    const double g = self.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = pp->value[i];
      if (p <= kEps || p >= 1.0 - kEps) continue;  // clamped region
      const double y = py->value[i];
      pp->grad[i] += g * (-y / p + (1.0 - y) / (1.0 - p));
    }
  });
}

}  // namespace cvar
