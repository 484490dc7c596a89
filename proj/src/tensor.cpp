#include "hma/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hma {

namespace {

thread_local GradientTape* g_active_tape = nullptr;

std::size_t checked_numel(const Shape& s) {
  if (s.empty()) {
    throw DimensionError("tensor rank must be at least 1");
  }
  std::size_t n = 1;
  for (std::size_t d : s) {
    if (d == 0) {
      throw DimensionError("tensor dimensions must be positive, got " +
                           shape_str(s));
    }
    n *= d;
  }
  return n;
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a rank-2 tensor, got " +
                         shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& x, const Tensor& y, const char* op) {
  if (x.shape() != y.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch: " +
                         shape_str(x.shape()) + " vs " + shape_str(y.shape()));
  }
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::string r;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) r += 'x';
    r += std::to_string(s[i]);
  }
  return r;
}

// --------------------------------------------------------------------------
// Tensor
// --------------------------------------------------------------------------

Tensor Tensor::zeros(Shape shape) {
  const std::size_t n = checked_numel(shape);
  Tensor t;
  t.node_ = std::make_shared<detail::TensorNode>();
  t.node_->shape = std::move(shape);
  t.node_->value.assign(n, 0.0);
  return t;
}

Tensor Tensor::full(Shape shape, double v) {
  Tensor t = zeros(std::move(shape));
  std::fill(t.node_->value.begin(), t.node_->value.end(), v);
  return t;
}

Tensor Tensor::from_values(Shape shape, std::vector<double> v) {
  const std::size_t n = checked_numel(shape);
  if (v.size() != n) {
    throw DimensionError("from_values: " + std::to_string(v.size()) +
                         " values for shape " + shape_str(shape));
  }
  Tensor t;
  t.node_ = std::make_shared<detail::TensorNode>();
  t.node_->shape = std::move(shape);
  t.node_->value = std::move(v);
  return t;
}

std::size_t Tensor::rows() const {
  require_rank2(*this, "rows");
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  require_rank2(*this, "cols");
  return node_->shape[1];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  require_rank2(*this, "at");
  if (r >= rows() || c >= cols()) {
    throw RangeError("at: index (" + std::to_string(r) + ", " +
                     std::to_string(c) + ") out of bounds for " +
                     shape_str(shape()));
  }
  return node_->value[r * cols() + c];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item: tensor has " + std::to_string(numel()) +
                        " elements");
  }
  return node_->value[0];
}

std::span<const double> Tensor::grad() const {
  if (node_->grad.empty()) {
    throw ContractError("grad: gradient not populated");
  }
  return node_->grad;
}

std::span<double> Tensor::grad_buffer() {
  if (node_->grad.empty()) {
    node_->grad.assign(node_->value.size(), 0.0);
  }
  return node_->grad;
}

void Tensor::zero_grad() {
  node_->grad.assign(node_->value.size(), 0.0);
}

Tensor Tensor::clone() const {
  Tensor t;
  t.node_ = std::make_shared<detail::TensorNode>();
  t.node_->shape = node_->shape;
  t.node_->value = node_->value;
  return t;
}

// --------------------------------------------------------------------------
// Tape
// --------------------------------------------------------------------------

GradientTape* GradientTape::active() { return g_active_tape; }

TapeScope::TapeScope(GradientTape& t) : prev_(g_active_tape) {
  g_active_tape = &t;
}

TapeScope::~TapeScope() { g_active_tape = prev_; }

/// Links `out` into the active tape when any input requires grad.
void detail_record(std::span<const Tensor> inputs, Tensor& out,
                   std::function<void()> backward_fn) {
  GradientTape* tape = GradientTape::active();
  if (tape == nullptr) return;
  bool needed = false;
  for (const Tensor& in : inputs) {
    needed = needed || in.node_->requires_grad;
  }
  if (!needed) return;
  out.node_->requires_grad = true;
  out.node_->tape = tape;
  tape->ops_.push_back(std::move(backward_fn));
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ContractError("backward: loss must be a single element, got " +
                        shape_str(loss.shape()));
  }
  GradientTape* tape = loss.tape();
  if (tape == nullptr) {
    throw ContractError("backward: loss is not on an active tape");
  }
  Tensor seed = loss;
  seed.grad_buffer()[0] += 1.0;
  for (auto it = tape->ops_.rbegin(); it != tape->ops_.rend(); ++it) {
    (*it)();
  }
}

// --------------------------------------------------------------------------
// Ops
// --------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree: " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::zeros({m, n});
  {
    const auto av = a.values();
    const auto bv = b.values();
    auto ov = out.mutable_values();
    for (std::size_t i = 0; i < m; ++i) {
      double* orow = &ov[i * n];
      for (std::size_t kk = 0; kk < k; ++kk) {
        const double aik = av[i * k + kk];
        if (aik == 0.0) continue;  // padding rows are common
        const double* brow = &bv[kk * n];
        for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
      }
    }
  }
  const Tensor ins[] = {a, b};
  detail_record(ins, out, [a = a, b = b, out = out]() mutable {
    if (!out.has_grad()) return;
    const auto g = out.grad();
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (a.requires_grad()) {
      auto ga = a.grad_buffer();
      const auto bv = b.values();
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = &g[i * n];
        for (std::size_t kk = 0; kk < k; ++kk) {
          const double* brow = &bv[kk * n];
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
          ga[i * k + kk] += s;
        }
      }
    }
    if (b.requires_grad()) {
      auto gb = b.grad_buffer();
      const auto av = a.values();
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = &g[i * n];
        for (std::size_t kk = 0; kk < k; ++kk) {
          const double aik = av[i * k + kk];
          if (aik == 0.0) continue;
          double* gbrow = &gb[kk * n];
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += aik * grow[j];
        }
      }
    }
  });
  return out;
}

Tensor transpose(const Tensor& x) {
  require_rank2(x, "transpose");
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros({n, m});
  {
    const auto xv = x.values();
    auto ov = out.mutable_values();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ov[j * m + i] = xv[i * n + j];
  }
  const Tensor ins[] = {x};
  detail_record(ins, out, [x = x, out = out]() mutable {
    if (!out.has_grad() || !x.requires_grad()) return;
    const auto g = out.grad();
    auto gx = x.grad_buffer();
    const std::size_t m = x.rows(), n = x.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += g[j * m + i];
  });
  return out;
}

Tensor row_softmax(const Tensor& x) {
  require_rank2(x, "row_softmax");
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros({m, n});
  {
    const auto xv = x.values();
    auto ov = out.mutable_values();
    for (std::size_t i = 0; i < m; ++i) {
      const double* row = &xv[i * n];
      double mx = row[0];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double e = std::exp(row[j] - mx);
        ov[i * n + j] = e;
        sum += e;
      }
      for (std::size_t j = 0; j < n; ++j) ov[i * n + j] /= sum;
    }
  }
  const Tensor ins[] = {x};
  detail_record(ins, out, [x = x, out = out]() mutable {
    if (!out.has_grad() || !x.requires_grad()) return;
    const auto g = out.grad();
    const auto y = out.values();
    auto gx = x.grad_buffer();
    const std::size_t m = x.rows(), n = x.cols();
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * y[i * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        gx[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
      }
    }
  });
  return out;
}

namespace {

// Shared skeleton for same-shape binary ops.
template <class Fwd, class Bwd>
Tensor binary_op(const char* name, const Tensor& x, const Tensor& y, Fwd fwd,
                 Bwd bwd) {
  require_same_shape(x, y, name);
  Tensor out = Tensor::zeros(x.shape());
  {
    const auto xv = x.values();
    const auto yv = y.values();
    auto ov = out.mutable_values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = fwd(xv[i], yv[i]);
  }
  const Tensor ins[] = {x, y};
  detail_record(ins, out, [x = x, y = y, out = out, bwd]() mutable {
    if (!out.has_grad()) return;
    const auto g = out.grad();
    const auto xv = x.values();
    const auto yv = y.values();
    double* gx = x.requires_grad() ? x.grad_buffer().data() : nullptr;
    double* gy = y.requires_grad() ? y.grad_buffer().data() : nullptr;
    for (std::size_t i = 0; i < g.size(); ++i) {
      bwd(g[i], xv[i], yv[i], gx ? &gx[i] : nullptr, gy ? &gy[i] : nullptr);
    }
  });
  return out;
}

// Shared skeleton for pointwise unary ops whose derivative is a function of
// the output value.
template <class Fwd, class Deriv>
Tensor unary_op(const Tensor& x, Fwd fwd, Deriv deriv_from_out) {
  Tensor out = Tensor::zeros(x.shape());
  {
    const auto xv = x.values();
    auto ov = out.mutable_values();
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = fwd(xv[i]);
  }
  const Tensor ins[] = {x};
  detail_record(ins, out, [x = x, out = out, deriv_from_out]() mutable {
    if (!out.has_grad() || !x.requires_grad()) return;
    const auto g = out.grad();
    const auto y = out.values();
    const auto xv = x.values();
    auto gx = x.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      gx[i] += g[i] * deriv_from_out(y[i], xv[i]);
    }
  });
  return out;
}

}  // namespace

Tensor add(const Tensor& x, const Tensor& y) {
  return binary_op(
      "add", x, y, [](double a, double b) { return a + b; },
      [](double g, double, double, double* gx, double* gy) {
        if (gx) *gx += g;
        if (gy) *gy += g;
      });
}

Tensor sub(const Tensor& x, const Tensor& y) {
  return binary_op(
      "sub", x, y, [](double a, double b) { return a - b; },
      [](double g, double, double, double* gx, double* gy) {
        if (gx) *gx += g;
        if (gy) *gy -= g;
      });
}

Tensor mul(const Tensor& x, const Tensor& y) {
  return binary_op(
      "mul", x, y, [](double a, double b) { return a * b; },
      [](double g, double a, double b, double* gx, double* gy) {
        if (gx) *gx += g * b;
        if (gy) *gy += g * a;
      });
}

Tensor add(const Tensor& x, double c) {
  return unary_op(
      x, [c](double a) { return a + c; },
      [](double, double) { return 1.0; });
}

Tensor sub(double c, const Tensor& x) {
  return unary_op(
      x, [c](double a) { return c - a; },
      [](double, double) { return -1.0; });
}

Tensor scale(const Tensor& x, double c) {
  return unary_op(
      x, [c](double a) { return a * c; },
      [c](double, double) { return c; });
}

Tensor tanh(const Tensor& x) {
  return unary_op(
      x, [](double a) { return std::tanh(a); },
      [](double y, double) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      x, [](double a) { return 1.0 / (1.0 + std::exp(-a)); },
      [](double y, double) { return y * (1.0 - y); });
}

Tensor log(const Tensor& x) {
  for (double v : x.values()) {
    if (!(v > 0.0)) {
      throw ContractError("log: non-positive entry " + std::to_string(v));
    }
  }
  return unary_op(
      x, [](double a) { return std::log(a); },
      [](double, double xin) { return 1.0 / xin; });
}

Tensor add_rowvec(const Tensor& x, const Tensor& v) {
  require_rank2(x, "add_rowvec");
  require_rank2(v, "add_rowvec");
  if (v.rows() != 1 || v.cols() != x.cols()) {
    throw DimensionError("add_rowvec: expected a 1x" +
                         std::to_string(x.cols()) + " row vector, got " +
                         shape_str(v.shape()));
  }
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros({m, n});
  {
    const auto xv = x.values();
    const auto vv = v.values();
    auto ov = out.mutable_values();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ov[i * n + j] = xv[i * n + j] + vv[j];
  }
  const Tensor ins[] = {x, v};
  detail_record(ins, out, [x = x, v = v, out = out]() mutable {
    if (!out.has_grad()) return;
    const auto g = out.grad();
    const std::size_t m = x.rows(), n = x.cols();
    if (x.requires_grad()) {
      auto gx = x.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (v.requires_grad()) {
      auto gv = v.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gv[j] += g[i * n + j];
    }
  });
  return out;
}

Tensor concat_last(std::span<const Tensor> xs) {
  if (xs.empty()) {
    throw ContractError("concat_last: needs at least one input");
  }
  const std::size_t rank = xs[0].rank();
  Shape lead(xs[0].shape().begin(), xs[0].shape().end() - 1);
  std::size_t out_last = 0;
  for (const Tensor& t : xs) {
    if (t.rank() != rank ||
        !std::equal(lead.begin(), lead.end(), t.shape().begin())) {
      throw DimensionError("concat_last: leading dims disagree: " +
                           shape_str(xs[0].shape()) + " vs " +
                           shape_str(t.shape()));
    }
    out_last += t.shape().back();
  }
  std::size_t outer = 1;
  for (std::size_t d : lead) outer *= d;
  Shape out_shape = lead;
  out_shape.push_back(out_last);
  Tensor out = Tensor::zeros(out_shape);
  {
    auto ov = out.mutable_values();
    std::size_t col0 = 0;
    for (const Tensor& t : xs) {
      const auto tv = t.values();
      const std::size_t w = t.shape().back();
      for (std::size_t r = 0; r < outer; ++r) {
        std::copy_n(&tv[r * w], w, &ov[r * out_last + col0]);
      }
      col0 += w;
    }
  }
  std::vector<Tensor> inputs(xs.begin(), xs.end());
  detail_record(inputs, out, [inputs, out, outer, out_last]() mutable {
    if (!out.has_grad()) return;
    const auto g = out.grad();
    std::size_t col0 = 0;
    for (Tensor& t : inputs) {
      const std::size_t w = t.shape().back();
      if (t.requires_grad()) {
        auto gt = t.grad_buffer();
        for (std::size_t r = 0; r < outer; ++r)
          for (std::size_t j = 0; j < w; ++j)
            gt[r * w + j] += g[r * out_last + col0 + j];
      }
      col0 += w;
    }
  });
  return out;
}

Tensor concat_last(std::initializer_list<Tensor> xs) {
  return concat_last(std::span<const Tensor>(xs.begin(), xs.size()));
}

Tensor concat_rows(std::span<const Tensor> xs) {
  if (xs.empty()) {
    throw ContractError("concat_rows: needs at least one input");
  }
  const std::size_t n = xs[0].cols();
  std::size_t m = 0;
  for (const Tensor& t : xs) {
    require_rank2(t, "concat_rows");
    if (t.cols() != n) {
      throw DimensionError("concat_rows: column counts disagree: " +
                           shape_str(xs[0].shape()) + " vs " +
                           shape_str(t.shape()));
    }
    m += t.rows();
  }
  Tensor out = Tensor::zeros({m, n});
  {
    auto ov = out.mutable_values();
    std::size_t row0 = 0;
    for (const Tensor& t : xs) {
      std::copy_n(t.values().data(), t.numel(), &ov[row0 * n]);
      row0 += t.rows();
    }
  }
  std::vector<Tensor> inputs(xs.begin(), xs.end());
  detail_record(inputs, out, [inputs, out, n]() mutable {
    if (!out.has_grad()) return;
    const auto g = out.grad();
    std::size_t row0 = 0;
    for (Tensor& t : inputs) {
      if (t.requires_grad()) {
        auto gt = t.grad_buffer();
        for (std::size_t i = 0; i < t.numel(); ++i) gt[i] += g[row0 * n + i];
      }
      row0 += t.rows();
    }
  });
  return out;
}

Tensor concat_rows(std::initializer_list<Tensor> xs) {
  return concat_rows(std::span<const Tensor>(xs.begin(), xs.size()));
}

Tensor slice_rows(const Tensor& x, std::size_t r0, std::size_t r1) {
  require_rank2(x, "slice_rows");
  if (r0 >= r1 || r1 > x.rows()) {
    throw RangeError("slice_rows: range [" + std::to_string(r0) + ", " +
                     std::to_string(r1) + ") invalid for " +
                     shape_str(x.shape()));
  }
  const std::size_t n = x.cols();
  Tensor out = Tensor::zeros({r1 - r0, n});
  std::copy_n(&x.values()[r0 * n], (r1 - r0) * n, out.mutable_values().data());
  const Tensor ins[] = {x};
  detail_record(ins, out, [x = x, out = out, r0, n]() mutable {
    if (!out.has_grad() || !x.requires_grad()) return;
    const auto g = out.grad();
    auto gx = x.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) gx[r0 * n + i] += g[i];
  });
  return out;
}

Tensor slice_cols(const Tensor& x, std::size_t c0, std::size_t c1) {
  require_rank2(x, "slice_cols");
  if (c0 >= c1 || c1 > x.cols()) {
    throw RangeError("slice_cols: range [" + std::to_string(c0) + ", " +
                     std::to_string(c1) + ") invalid for " +
                     shape_str(x.shape()));
  }
  const std::size_t m = x.rows(), n = x.cols(), w = c1 - c0;
  Tensor out = Tensor::zeros({m, w});
  {
    const auto xv = x.values();
    auto ov = out.mutable_values();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(&xv[i * n + c0], w, &ov[i * w]);
  }
  const Tensor ins[] = {x};
  detail_record(ins, out, [x = x, out = out, c0, w]() mutable {
    if (!out.has_grad() || !x.requires_grad()) return;
    const auto g = out.grad();
    auto gx = x.grad_buffer();
    const std::size_t m = x.rows(), n = x.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) gx[i * n + c0 + j] += g[i * w + j];
  });
  return out;
}

Tensor sum_all(const Tensor& x) {
  Tensor out = Tensor::zeros({1, 1});
  {
    double s = 0.0;
    for (double v : x.values()) s += v;
    out.mutable_values()[0] = s;
  }
  const Tensor ins[] = {x};
  detail_record(ins, out, [x = x, out = out]() mutable {
    if (!out.has_grad() || !x.requires_grad()) return;
    const double g = out.grad()[0];
    auto gx = x.grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
  return out;
}

Tensor mask_fill_cols(const Tensor& x, std::size_t valid_cols, double fill) {
  require_rank2(x, "mask_fill_cols");
  if (valid_cols > x.cols()) {
    throw RangeError("mask_fill_cols: valid_cols " +
                     std::to_string(valid_cols) + " exceeds " +
                     shape_str(x.shape()));
  }
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out = Tensor::zeros({m, n});
  {
    const auto xv = x.values();
    auto ov = out.mutable_values();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        ov[i * n + j] = j < valid_cols ? xv[i * n + j] : fill;
  }
  const Tensor ins[] = {x};
  detail_record(ins, out, [x = x, out = out, valid_cols]() mutable {
    if (!out.has_grad() || !x.requires_grad()) return;
    const auto g = out.grad();
    auto gx = x.grad_buffer();
    const std::size_t m = x.rows(), n = x.cols();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < valid_cols; ++j)
        gx[i * n + j] += g[i * n + j];
  });
  return out;
}

Tensor zero_rows_after(const Tensor& x, std::size_t valid_rows) {
  require_rank2(x, "zero_rows_after");
  if (valid_rows > x.rows()) {
    throw RangeError("zero_rows_after: valid_rows " +
                     std::to_string(valid_rows) + " exceeds " +
                     shape_str(x.shape()));
  }
  const std::size_t n = x.cols();
  Tensor out = Tensor::zeros(x.shape());
  std::copy_n(x.values().data(), valid_rows * n, out.mutable_values().data());
  const Tensor ins[] = {x};
  detail_record(ins, out, [x = x, out = out, valid_rows, n]() mutable {
    if (!out.has_grad() || !x.requires_grad()) return;
    const auto g = out.grad();
    auto gx = x.grad_buffer();
    for (std::size_t i = 0; i < valid_rows * n; ++i) gx[i] += g[i];
  });
  return out;
}

Tensor embedding_rows(const Tensor& table, std::span<const std::size_t> ids) {
  require_rank2(table, "embedding_rows");
  if (ids.empty()) {
    throw ContractError("embedding_rows: needs at least one id");
  }
  const std::size_t rows = table.rows(), n = table.cols();
  for (std::size_t id : ids) {
    if (id >= rows) {
      throw RangeError("embedding_rows: id " + std::to_string(id) +
                       " out of range for table " + shape_str(table.shape()));
    }
  }
  Tensor out = Tensor::zeros({ids.size(), n});
  {
    const auto tv = table.values();
    auto ov = out.mutable_values();
    for (std::size_t r = 0; r < ids.size(); ++r)
      std::copy_n(&tv[ids[r] * n], n, &ov[r * n]);
  }
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  const Tensor ins[] = {table};
  detail_record(ins, out, [table = table, out = out, idv, n]() mutable {
    if (!out.has_grad() || !table.requires_grad()) return;
    const auto g = out.grad();
    auto gt = table.grad_buffer();
    for (std::size_t r = 0; r < idv.size(); ++r)
      for (std::size_t j = 0; j < n; ++j) gt[idv[r] * n + j] += g[r * n + j];
  });
  return out;
}

Tensor conv1d_maxpool(const Tensor& chars, const Tensor& filters,
                      const Tensor& bias, std::size_t valid_len) {
  require_rank2(chars, "conv1d_maxpool");
  if (filters.rank() != 3) {
    throw DimensionError("conv1d_maxpool: filters must be [w×d_in×d_out], got " +
                         shape_str(filters.shape()));
  }
  const std::size_t len = chars.rows(), d_in = chars.cols();
  const std::size_t w = filters.shape()[0];
  const std::size_t d_out = filters.shape()[2];
  if (filters.shape()[1] != d_in) {
    throw DimensionError("conv1d_maxpool: filters expect input width " +
                         std::to_string(filters.shape()[1]) + ", chars are " +
                         shape_str(chars.shape()));
  }
  if (bias.rank() != 1 || bias.shape()[0] != d_out) {
    throw DimensionError("conv1d_maxpool: bias must be [" +
                         std::to_string(d_out) + "], got " +
                         shape_str(bias.shape()));
  }
  if (valid_len < 1) {
    throw RangeError("conv1d_maxpool: valid_len must be at least 1");
  }
  if (valid_len > len) {
    throw RangeError("conv1d_maxpool: valid_len " + std::to_string(valid_len) +
                     " exceeds " + std::to_string(len) + " rows");
  }
  // Shorter-than-filter sequences are implicitly zero-padded to one window.
  const std::size_t padded = std::max(valid_len, w);
  const std::size_t n_windows = padded - w + 1;

  Tensor out = Tensor::zeros({1, d_out});
  std::vector<std::size_t> best(d_out, 0);
  {
    const auto cv = chars.values();
    const auto fv = filters.values();
    const auto bv = bias.values();
    auto ov = out.mutable_values();
    for (std::size_t o = 0; o < d_out; ++o) {
      double best_v = -std::numeric_limits<double>::infinity();
      std::size_t best_i = 0;
      for (std::size_t i = 0; i < n_windows; ++i) {
        double s = bv[o];
        for (std::size_t j = 0; j < w; ++j) {
          const std::size_t r = i + j;
          if (r >= valid_len) continue;  // rows past valid_len read as zero
          for (std::size_t c = 0; c < d_in; ++c) {
            s += cv[r * d_in + c] * fv[(j * d_in + c) * d_out + o];
          }
        }
        if (s > best_v) {  // strict: first argmax wins on ties
          best_v = s;
          best_i = i;
        }
      }
      ov[o] = best_v;
      best[o] = best_i;
    }
  }
  const Tensor ins[] = {chars, filters, bias};
  detail_record(ins, out,
                [chars = chars, filters = filters, bias = bias, out = out, best, valid_len, w]() mutable {
    if (!out.has_grad()) return;
    const auto g = out.grad();
    const std::size_t d_in = chars.cols();
    const std::size_t d_out = filters.shape()[2];
    const auto cv = chars.values();
    const auto fv = filters.values();
    double* gc = chars.requires_grad() ? chars.grad_buffer().data() : nullptr;
    double* gf = filters.requires_grad() ? filters.grad_buffer().data() : nullptr;
    double* gb = bias.requires_grad() ? bias.grad_buffer().data() : nullptr;
    for (std::size_t o = 0; o < d_out; ++o) {
      const double go = g[o];
      if (go == 0.0) continue;
      if (gb) gb[o] += go;
      const std::size_t i0 = best[o];
      for (std::size_t j = 0; j < w; ++j) {
        const std::size_t r = i0 + j;
        if (r >= valid_len) continue;
        for (std::size_t c = 0; c < d_in; ++c) {
          if (gc) gc[r * d_in + c] += go * fv[(j * d_in + c) * d_out + o];
          if (gf) gf[(j * d_in + c) * d_out + o] += go * cv[r * d_in + c];
        }
      }
    }
  });
  return out;
}

std::pair<Tensor, Tensor> lstm_cell(const Tensor& x_t, const Tensor& h_prev,
                                    const Tensor& c_prev,
                                    const LstmCellWeights& w) {
  const auto gate = [&](const Tensor& wi, const Tensor& ui, const Tensor& bi) {
    return add(add(matmul(x_t, wi), matmul(h_prev, ui)), bi);
  };
  const Tensor in_gate = sigmoid(gate(w.w_input, w.u_input, w.b_input));
  const Tensor forget_gate = sigmoid(gate(w.w_forget, w.u_forget, w.b_forget));
  const Tensor candidate = tanh(gate(w.w_cell, w.u_cell, w.b_cell));
  const Tensor out_gate = sigmoid(gate(w.w_output, w.u_output, w.b_output));
  Tensor c_t = add(mul(forget_gate, c_prev), mul(in_gate, candidate));
  Tensor h_t = mul(out_gate, tanh(c_t));
  return {std::move(h_t), std::move(c_t)};
}

}  // namespace hma
