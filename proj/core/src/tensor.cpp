#include "ftvsr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace ftvsr {

namespace {

thread_local bool g_grad_enabled = true;

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) strides[i - 1] = strides[i] * shape[i];
  return strides;
}

// Splits a shape around `axis` into (outer, extent, inner) loop counts.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                                " vs " + shape_to_string(b.shape()));
  }
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

std::vector<double>& TensorImpl::grad_buffer() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor::Tensor() = default;
Tensor::Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw std::invalid_argument("Tensor::from: " + std::to_string(values.size()) +
                                " values do not fill shape " + shape_to_string(shape));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw std::domain_error("Tensor::from: non-finite value");
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({}, {value}, requires_grad); }

Tensor Tensor::eye(std::size_t n, bool requires_grad) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  return from({n, n}, std::move(v), requires_grad);
}

const Shape& Tensor::shape() const {
  if (!impl_) throw std::logic_error("Tensor: use of undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw std::out_of_range("Tensor::dim: axis out of range");
  return s[axis];
}

std::size_t Tensor::numel() const { return shape_numel(shape()); }

std::span<const double> Tensor::data() const {
  shape();
  return impl_->data;
}

std::span<double> Tensor::mutable_data() {
  shape();
  return impl_->data;
}

double Tensor::item() const {
  if (numel() != 1) throw std::invalid_argument("Tensor::item: tensor has " + std::to_string(numel()) + " elements");
  return impl_->data[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  const auto& s = shape();
  if (index.size() != s.size()) throw std::invalid_argument("Tensor::at: rank mismatch");
  std::size_t offset = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= s[axis]) throw std::out_of_range("Tensor::at: index out of range");
    offset = offset * s[axis] + i;
    ++axis;
  }
  return impl_->data[offset];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool flag) {
  shape();
  impl_->requires_grad = flag;
}

bool Tensor::has_grad() const { return impl_ && impl_->grad.size() == impl_->data.size() && !impl_->data.empty(); }

std::span<const double> Tensor::grad() const {
  shape();
  return impl_->grad;
}

void Tensor::zero_grad() {
  shape();
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return from(shape(), impl_->data); }

Tensor Tensor::clone() const { return from(shape(), impl_->data, requires_grad()); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor make_op_result(const char* op, Shape shape, std::vector<double> values,
                      const std::vector<Tensor>& parents, BackwardFn backward) {
  for (double v : values) {
    if (!std::isfinite(v)) throw std::domain_error(std::string(op) + ": produced a non-finite value");
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(values);
  impl->op = op;
  const bool track = g_grad_enabled && std::any_of(parents.begin(), parents.end(),
                                                   [](const Tensor& p) { return p.requires_grad(); });
  if (track) {
    impl->requires_grad = true;
    impl->parents.reserve(parents.size());
    for (const auto& p : parents) impl->parents.push_back(p.impl_ptr());
    impl->backward = std::move(backward);
  }
  return Tensor(std::move(impl));
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got shape " + shape_to_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> visited;
  std::vector<std::pair<TensorImpl*, std::size_t>> stack;
  stack.emplace_back(loss.impl(), 0);
  visited.insert(loss.impl());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorImpl* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (TensorImpl* node : order) {
    if (!node->is_leaf()) node->grad.assign(node->data.size(), 0.0);
  }
  loss.impl()->grad_buffer()[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* node = *it;
    if (node->is_leaf()) continue;
    node->backward(node->grad);
    // Interior gradients are not kept once propagated.
    std::vector<double>().swap(node->grad);
  }
}

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  auto pa = a.impl_ptr(), pb = b.impl_ptr();
  return make_op_result("add", a.shape(), std::move(out), {a, b}, [pa, pb](std::span<const double> g) {
    for (auto* p : {pa.get(), pb.get()}) {
      if (!p->requires_grad) continue;
      auto& ga = p->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  auto pa = a.impl_ptr(), pb = b.impl_ptr();
  return make_op_result("sub", a.shape(), std::move(out), {a, b}, [pa, pb](std::span<const double> g) {
    if (pa->requires_grad) {
      auto& ga = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (pb->requires_grad) {
      auto& gb = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  auto pa = a.impl_ptr(), pb = b.impl_ptr();
  return make_op_result("mul", a.shape(), std::move(out), {a, b}, [pa, pb](std::span<const double> g) {
    if (pa->requires_grad) {
      auto& ga = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * pb->data[i];
    }
    if (pb->requires_grad) {
      auto& gb = pb->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * pa->data[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v *= factor;
  auto pa = a.impl_ptr();
  return make_op_result("scale", a.shape(), std::move(out), {a}, [pa, factor](std::span<const double> g) {
    auto& ga = pa->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
}

Tensor add_scalar(const Tensor& a, double value) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (double& v : out) v += value;
  auto pa = a.impl_ptr();
  return make_op_result("add_scalar", a.shape(), std::move(out), {a}, [pa](std::span<const double> g) {
    auto& ga = pa->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Tensor sqrt(const Tensor& a) {
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (x[i] < 0.0) throw std::domain_error("sqrt: negative input");
    out[i] = std::sqrt(x[i]);
  }
  auto pa = a.impl_ptr();
  auto result = make_op_result("sqrt", a.shape(), std::move(out), {a}, nullptr);
  if (result.requires_grad()) {
    std::weak_ptr<TensorImpl> self = result.impl_ptr();
    result.impl()->backward = [pa, self](std::span<const double> g) {
      auto out_impl = self.lock();
      auto& ga = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * 0.5 / out_impl->data[i];
    };
  }
  return result;
}

Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x[i]);
  auto pa = a.impl_ptr();
  auto result = make_op_result("tanh", a.shape(), std::move(out), {a}, nullptr);
  if (result.requires_grad()) {
    std::weak_ptr<TensorImpl> self = result.impl_ptr();
    result.impl()->backward = [pa, self](std::span<const double> g) {
      auto out_impl = self.lock();
      auto& ga = pa->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = out_impl->data[i];
        ga[i] += g[i] * (1.0 - y * y);
      }
    };
  }
  return result;
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2, "matmul: operands must be rank 2, got " + shape_to_string(a.shape()) +
                                              " and " + shape_to_string(b.shape()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, "matmul: inner dimensions differ: " + shape_to_string(a.shape()) + " * " +
                             shape_to_string(b.shape()));
  std::vector<double> out(m * n, 0.0);
  auto x = a.data(), y = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* __restrict row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = x[i * k + p];
      const double* __restrict brow = y.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
    }
  }
  auto pa = a.impl_ptr(), pb = b.impl_ptr();
  return make_op_result("matmul", {m, n}, std::move(out), {a, b}, [pa, pb, m, k, n](std::span<const double> g) {
    if (pa->requires_grad) {
      // dA = G * B^T, with B^T materialized so the inner loop is contiguous.
      std::vector<double> bt(n * k);
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = pb->data[p * n + j];
      auto& ga = pa->grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        double* __restrict garow = ga.data() + i * k;
        for (std::size_t j = 0; j < n; ++j) {
          const double s = g[i * n + j];
          const double* __restrict btrow = bt.data() + j * k;
          for (std::size_t p = 0; p < k; ++p) garow[p] += s * btrow[p];
        }
      }
    }
    if (pb->requires_grad) {
      // dB = A^T * G
      auto& gb = pb->grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        const double* __restrict grow = g.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double s = pa->data[i * k + p];
          double* __restrict gbrow = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += s * grow[j];
        }
      }
    }
  });
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  require(x.rank() == 2 && bias.rank() == 1 && bias.dim(0) == x.dim(1),
          "add_row_bias: expected [m x n] + [n], got " + shape_to_string(x.shape()) + " + " +
              shape_to_string(bias.shape()));
  const std::size_t m = x.dim(0), n = x.dim(1);
  std::vector<double> out(x.data().begin(), x.data().end());
  auto b = bias.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += b[j];
  auto px = x.impl_ptr(), pb = bias.impl_ptr();
  return make_op_result("add_row_bias", x.shape(), std::move(out), {x, bias}, [px, pb, m, n](std::span<const double> g) {
    if (px->requires_grad) {
      auto& gx = px->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (pb->requires_grad) {
      auto& gb = pb->grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
    }
  });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  require(axis < x.rank(), "softmax: axis " + std::to_string(axis) + " out of range for " + shape_to_string(x.shape()));
  const auto s = split_axis(x.shape(), axis);
  std::vector<double> out(x.numel());
  auto in = x.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.extent * s.inner + i;
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t e = 0; e < s.extent; ++e) peak = std::max(peak, in[base + e * s.inner]);
      double total = 0.0;
      for (std::size_t e = 0; e < s.extent; ++e) {
        const double v = std::exp(in[base + e * s.inner] - peak);
        out[base + e * s.inner] = v;
        total += v;
      }
      for (std::size_t e = 0; e < s.extent; ++e) out[base + e * s.inner] /= total;
    }
  }
  auto px = x.impl_ptr();
  auto result = make_op_result("softmax", x.shape(), std::move(out), {x}, nullptr);
  if (result.requires_grad()) {
    std::weak_ptr<TensorImpl> self = result.impl_ptr();
    result.impl()->backward = [px, self, s](std::span<const double> g) {
      auto y = self.lock();
      auto& gx = px->grad_buffer();
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          const std::size_t base = o * s.extent * s.inner + i;
          double dot = 0.0;
          for (std::size_t e = 0; e < s.extent; ++e) dot += g[base + e * s.inner] * y->data[base + e * s.inner];
          for (std::size_t e = 0; e < s.extent; ++e) {
            const std::size_t idx = base + e * s.inner;
            gx[idx] += y->data[idx] * (g[idx] - dot);
          }
        }
      }
    };
  }
  return result;
}

// ---------------------------------------------------------------------------
// Layout

Tensor reshape(const Tensor& x, Shape shape) {
  require(shape_numel(shape) == x.numel(),
          "reshape: cannot view " + shape_to_string(x.shape()) + " as " + shape_to_string(shape));
  std::vector<double> out(x.data().begin(), x.data().end());
  auto px = x.impl_ptr();
  return make_op_result("reshape", std::move(shape), std::move(out), {x}, [px](std::span<const double> g) {
    auto& gx = px->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
  const auto& in_shape = x.shape();
  require(axes.size() == in_shape.size(), "permute: axes size does not match rank");
  std::vector<bool> seen(axes.size(), false);
  for (auto a : axes) {
    require(a < axes.size() && !seen[a], "permute: axes must be a permutation");
    seen[a] = true;
  }
  Shape out_shape(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) out_shape[i] = in_shape[axes[i]];
  const auto in_strides = strides_of(in_shape);
  // Source offset for each output element.
  std::vector<std::size_t> index(x.numel());
  std::vector<std::size_t> counter(axes.size(), 0);
  std::size_t src = 0;
  for (std::size_t j = 0; j < index.size(); ++j) {
    index[j] = src;
    for (std::size_t d = axes.size(); d-- > 0;) {
      ++counter[d];
      src += in_strides[axes[d]];
      if (counter[d] < out_shape[d]) break;
      src -= counter[d] * in_strides[axes[d]];
      counter[d] = 0;
    }
  }
  return gather(x, std::move(index), std::move(out_shape));
}

Tensor transpose(const Tensor& x) {
  require(x.rank() == 2, "transpose: expected rank 2");
  return permute(x, {1, 0});
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
  require(axis < x.rank(), "slice: axis out of range");
  require(start + length <= x.dim(axis), "slice: range [" + std::to_string(start) + ", " +
                                             std::to_string(start + length) + ") exceeds extent " +
                                             std::to_string(x.dim(axis)));
  const auto s = split_axis(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = length;
  std::vector<double> out(s.outer * length * s.inner);
  auto in = x.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(in.begin() + (o * s.extent + start) * s.inner, length * s.inner, out.begin() + o * length * s.inner);
  }
  auto px = x.impl_ptr();
  return make_op_result("slice", std::move(out_shape), std::move(out), {x}, [px, s, start, length](std::span<const double> g) {
    auto& gx = px->grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o) {
      const double* src = g.data() + o * length * s.inner;
      double* dst = gx.data() + (o * s.extent + start) * s.inner;
      for (std::size_t i = 0; i < length * s.inner; ++i) dst[i] += src[i];
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  require(!parts.empty(), "concat: no tensors");
  const Shape& first = parts.front().shape();
  require(axis < first.size(), "concat: axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    require(s.size() == first.size(), "concat: rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d) {
      if (d != axis && s[d] != first[d]) {
        throw std::invalid_argument("concat: incompatible shapes " + shape_to_string(first) + " and " +
                                    shape_to_string(s) + " along axis " + std::to_string(axis));
      }
    }
    out_shape[axis] += s[axis];
  }
  const auto out_split = split_axis(out_shape, axis);
  std::vector<double> out(shape_numel(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const auto s = split_axis(p.shape(), axis);
    auto in = p.data();
    for (std::size_t o = 0; o < s.outer; ++o) {
      std::copy_n(in.begin() + o * s.extent * s.inner, s.extent * s.inner,
                  out.begin() + (o * out_split.extent + offset) * s.inner);
    }
    offset += s.extent;
  }
  std::vector<std::shared_ptr<TensorImpl>> impls;
  for (const auto& p : parts) impls.push_back(p.impl_ptr());
  return make_op_result("concat", std::move(out_shape), std::move(out), parts,
                        [impls, offsets, axis, out_split](std::span<const double> g) {
                          for (std::size_t k = 0; k < impls.size(); ++k) {
                            auto* p = impls[k].get();
                            if (!p->requires_grad) continue;
                            const auto s = split_axis(p->shape, axis);
                            auto& gp = p->grad_buffer();
                            for (std::size_t o = 0; o < s.outer; ++o) {
                              const double* src = g.data() + (o * out_split.extent + offsets[k]) * s.inner;
                              double* dst = gp.data() + o * s.extent * s.inner;
                              for (std::size_t i = 0; i < s.extent * s.inner; ++i) dst[i] += src[i];
                            }
                          }
                        });
}

Tensor gather(const Tensor& x, std::vector<std::size_t> index, Shape shape) {
  require(shape_numel(shape) == index.size(), "gather: index count does not match output shape");
  auto in = x.data();
  std::vector<double> out(index.size());
  for (std::size_t j = 0; j < index.size(); ++j) {
    if (index[j] >= in.size()) throw std::out_of_range("gather: index out of range");
    out[j] = in[index[j]];
  }
  auto px = x.impl_ptr();
  auto shared_index = std::make_shared<const std::vector<std::size_t>>(std::move(index));
  return make_op_result("gather", std::move(shape), std::move(out), {x}, [px, shared_index](std::span<const double> g) {
    auto& gx = px->grad_buffer();
    const auto& idx = *shared_index;
    for (std::size_t j = 0; j < idx.size(); ++j) gx[idx[j]] += g[j];
  });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  auto px = x.impl_ptr();
  return make_op_result("sum", {}, {total}, {x}, [px](std::span<const double> g) {
    auto& gx = px->grad_buffer();
    for (double& v : gx) v += g[0];
  });
}

Tensor sum(const Tensor& x, std::size_t axis) {
  require(axis < x.rank(), "sum: axis out of range");
  const auto s = split_axis(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  std::vector<double> out(s.outer * s.inner, 0.0);
  auto in = x.data();
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t e = 0; e < s.extent; ++e)
      for (std::size_t i = 0; i < s.inner; ++i) out[o * s.inner + i] += in[(o * s.extent + e) * s.inner + i];
  auto px = x.impl_ptr();
  return make_op_result("sum_axis", std::move(out_shape), std::move(out), {x}, [px, s](std::span<const double> g) {
    auto& gx = px->grad_buffer();
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t e = 0; e < s.extent; ++e)
        for (std::size_t i = 0; i < s.inner; ++i) gx[(o * s.extent + e) * s.inner + i] += g[o * s.inner + i];
  });
}

Tensor mean(const Tensor& x) {
  require(x.numel() > 0, "mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

}  // namespace ftvsr
