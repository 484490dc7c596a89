#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hma/error.hpp"

namespace hma {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

class GradientTape;

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until the backward pass first touches it
  bool requires_grad = false;
  GradientTape* tape = nullptr;
};

}  // namespace detail

/// Dense row-major tensor of 64-bit floats. A Tensor is a cheap shared
/// handle onto its storage; values produced by an op are never mutated
/// afterwards. Leaves (parameters, loaded tables) expose mutable_values()
/// for the optimizer and file loaders, which run single-threaded.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);
  static Tensor from_values(Shape shape, std::vector<double> v);
  static Tensor scalar(double v) { return from_values({1, 1}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }
  /// Rank-2 accessors.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const { return node_->value; }
  /// Leaf mutation only (optimizer step, table loading).
  std::span<double> mutable_values() { return node_->value; }
  double at(std::size_t r, std::size_t c) const;
  double item() const;  // numel-1 tensors

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool b) {
    node_->requires_grad = b;
    return *this;
  }

  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient contents; ContractError when absent.
  std::span<const double> grad() const;
  /// Gradient buffer, allocated as zeros on first use.
  std::span<double> grad_buffer();
  /// Zero-fill (and allocate if needed) the gradient buffer.
  void zero_grad();
  /// Drop the gradient buffer entirely.
  void clear_grad() { node_->grad.clear(); }

  /// Deep copy, detached from any tape.
  Tensor clone() const;

  bool same_storage(const Tensor& o) const { return node_ == o.node_; }

  GradientTape* tape() const { return node_->tape; }

 private:
  std::shared_ptr<detail::TensorNode> node_;
  friend class GradientTape;
  friend void detail_record(std::span<const Tensor> inputs, Tensor& out,
                            std::function<void()> backward);
};

/// Ordered record of executed ops for one forward pass. The backward pass
/// replays the record in exact reverse execution order; every closure
/// accumulates (adds) into input gradient buffers, never overwrites. A tape
/// is rebuilt per forward pass and is single-writer: one training step runs
/// on one thread.
class GradientTape {
 public:
  GradientTape() = default;
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;

  std::size_t size() const { return ops_.size(); }
  void clear() { ops_.clear(); }

  /// The tape activated by the innermost live TapeScope, or nullptr.
  static GradientTape* active();

 private:
  std::vector<std::function<void()>> ops_;
  friend struct TapeScope;
  friend void backward(const Tensor& loss);
  friend void detail_record(std::span<const Tensor> inputs, Tensor& out,
                            std::function<void()> backward);
};

/// Activates a tape for the current thread while in scope.
struct TapeScope {
  explicit TapeScope(GradientTape& t);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  GradientTape* prev_;
};

/// Seeds d(loss)/d(loss) = 1 and replays the loss's tape in reverse,
/// populating grad buffers of every reachable tensor that requires grad.
/// ContractError when loss is not a single element or not on a tape.
void backward(const Tensor& loss);

// ---------------------------------------------------------------------------
// Ops. Each op computes eagerly and, when a tape is active and some input
// requires grad, records its backward closure onto the active tape.
// ---------------------------------------------------------------------------

/// Standard matrix product [m×k]·[k×n] → [m×n].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& x);

/// Row-wise softmax with per-row max subtraction.
Tensor row_softmax(const Tensor& x);

// Pointwise arithmetic; binary kinds demand identical shapes.
Tensor add(const Tensor& x, const Tensor& y);
Tensor add(const Tensor& x, double c);
Tensor sub(const Tensor& x, const Tensor& y);
Tensor sub(double c, const Tensor& x);
Tensor mul(const Tensor& x, const Tensor& y);
Tensor scale(const Tensor& x, double c);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
/// Natural log; ContractError on a non-positive entry.
Tensor log(const Tensor& x);

/// Adds a [1×n] row vector to every row of a [m×n] matrix.
Tensor add_rowvec(const Tensor& x, const Tensor& v);

/// Concatenation along the final dimension; all leading dims must agree.
Tensor concat_last(std::span<const Tensor> xs);
Tensor concat_last(std::initializer_list<Tensor> xs);

/// Vertical concatenation of rank-2 blocks sharing a column count.
Tensor concat_rows(std::span<const Tensor> xs);
Tensor concat_rows(std::initializer_list<Tensor> xs);

Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1);
Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1);

/// Sum of all entries → [1×1].
Tensor sum_all(const Tensor& x);

/// Copies x with columns at or beyond valid_cols replaced by `fill`;
/// gradient flows only through the kept columns.
Tensor mask_fill_cols(const Tensor& x, std::size_t valid_cols, double fill);

/// Copies x with rows at or beyond valid_rows zeroed.
Tensor zero_rows_after(const Tensor& x, std::size_t valid_rows);

/// Gathers table rows by index → [ids.size() × cols]; gradient scatter-adds
/// into the table. RangeError on an out-of-range id.
Tensor embedding_rows(const Tensor& table, std::span<const std::size_t> ids);

/// 1-D convolution over the first valid_len rows of chars [L×d_in] with
/// filters [w×d_in×d_out] and bias [d_out], then max-over-time pooling.
/// Rows at or beyond valid_len are read as zero; sequences shorter than the
/// filter width are implicitly zero-padded to it, giving exactly one window.
/// Ties take the first window; backward routes gradient to that window only.
Tensor conv1d_maxpool(const Tensor& chars, const Tensor& filters,
                      const Tensor& bias, std::size_t valid_len);

/// One LSTM cell's weights: four input projections [in×H], four recurrent
/// projections [H×H], four biases [1×H].
struct LstmCellWeights {
  Tensor w_input, w_forget, w_cell, w_output;
  Tensor u_input, u_forget, u_cell, u_output;
  Tensor b_input, b_forget, b_cell, b_output;
};

/// Standard LSTM step: sigmoid input/forget/output gates, tanh candidate.
/// x_t is [1×in], h_prev and c_prev are [1×H]; returns (h_t, c_t).
std::pair<Tensor, Tensor> lstm_cell(const Tensor& x_t, const Tensor& h_prev,
                                    const Tensor& c_prev,
                                    const LstmCellWeights& w);

}  // namespace hma
