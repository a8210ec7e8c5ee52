#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cvar {

namespace detail {

struct Node {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents' grads. Null for leaves.
  std::function<void(Node&)> backward_fn;

  // Scratch for graph walks; valid only within one backward() call.
  std::uint64_t epoch = 0;
  bool active = false;

  std::size_t size() const { return value.size(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

}  // namespace detail

class Rng;

// Dense float64 tensor participating in a dynamically recorded tape.
// Copying a Tensor copies the handle, not the storage; ops build fresh
// nodes so a forward pass always records a fresh graph.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<double> data,
         bool requires_grad = false);

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<std::size_t> shape, double v,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor random_normal(std::vector<std::size_t> shape, Rng& rng,
                              double stddev = 1.0, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const;
  std::size_t size() const;
  std::size_t rows() const;  // shape[0] (1 for scalars)
  std::size_t cols() const;  // trailing dimension

  std::span<const double> values() const;
  std::span<double> values_mut();  // in-place mutation (optimizer, loaders)
  double item() const;             // scalar value; throws if size != 1

  bool requires_grad() const;
  void set_requires_grad(bool v);
  bool has_grad() const;
  std::span<const double> grad() const;
  void zero_grad();   // resets an allocated grad buffer to zeros
  void clear_grad();  // drops the buffer entirely (has_grad() becomes false)

  // Runs reverse-mode accumulation from this scalar. Grads accumulate
  // across calls until cleared.
  void backward() const;

  // Stable identity of the underlying storage, for sharing asserts.
  std::uintptr_t id() const;

  detail::Node* node() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;

  friend Tensor make_op_result(std::vector<std::size_t> shape,
                               std::vector<double> value,
                               std::vector<Tensor> parents,
                               std::function<void(detail::Node&)> backward_fn);
};

// ---- ops -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);

// Binary elementwise with scalar or trailing-dimension broadcast.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor square(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor clamp(const Tensor& x, double lo, double hi);
Tensor scale(const Tensor& x, double c);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor reshape(const Tensor& x, std::vector<std::size_t> shape);

Tensor sum(const Tensor& x);     // all elements -> scalar
Tensor mean(const Tensor& x);    // all elements -> scalar
Tensor rowsum(const Tensor& x);  // [m x n] -> [m x 1]
// out[r, c] = x[r, c] * s[r]; s is [m] or [m x 1].
Tensor scale_rows(const Tensor& x, const Tensor& s);

// Embedding lookups. Backward scatters into the table rows.
Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& rows);
// Mean-pooled multi-token lookup (CSR layout); empty rows yield zeros.
Tensor gather_rows_mean(const Tensor& table,
                        const std::vector<std::size_t>& flat_rows,
                        const std::vector<std::size_t>& offsets);

// Mean binary cross entropy with predictions clamped to [1e-12, 1-1e-12].
Tensor bce(const Tensor& pred, const Tensor& labels);

std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace cvar
