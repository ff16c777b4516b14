#include "sbssl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace sbssl {

namespace {

thread_local bool g_grad_enabled = true;

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::vector<std::size_t> row_major_strides(const std::vector<int>& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) {
    strides[static_cast<std::size_t>(i)] =
        strides[static_cast<std::size_t>(i) + 1] * static_cast<std::size_t>(shape[static_cast<std::size_t>(i) + 1]);
  }
  return strides;
}

void check_shape_dims(const std::vector<int>& shape, const char* op) {
  for (int d : shape) {
    if (d <= 0) throw ShapeError(std::string(op) + ": non-positive dimension in " + shape_str(shape));
  }
}

std::shared_ptr<detail::TensorNode> new_node(std::vector<int> shape, std::vector<double> values,
                                             bool requires_grad) {
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->values = std::make_shared<std::vector<double>>(std::move(values));
  node->requires_grad = requires_grad;
  return node;
}

bool track(std::initializer_list<const Tensor*> inputs) {
  if (!g_grad_enabled) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

/// Builds the output node for an op. When tracking, wires parents and the
/// backward closure; otherwise the node is a constant leaf.
Tensor make_op(std::vector<int> shape, std::vector<double> values,
               std::initializer_list<const Tensor*> inputs,
               std::function<void(detail::TensorNode&)> backward_fn) {
  const bool tracked = track(inputs);
  auto node = new_node(std::move(shape), std::move(values), tracked);
  if (tracked) {
    node->parents.reserve(inputs.size());
    for (const Tensor* t : inputs) node->parents.push_back(t->node());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

// C[m x n] += A[m x k] * B[k x n]
void gemm_nn(int m, int k, int n, const double* a, const double* b, double* c) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * static_cast<std::size_t>(k);
    double* crow = c + static_cast<std::size_t>(i) * static_cast<std::size_t>(n);
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + static_cast<std::size_t>(p) * static_cast<std::size_t>(n);
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m x n] += A[m x k] * B[n x k]^T
void gemm_nt(int m, int k, int n, const double* a, const double* b, double* c) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * static_cast<std::size_t>(k);
    double* crow = c + static_cast<std::size_t>(i) * static_cast<std::size_t>(n);
    for (int j = 0; j < n; ++j) {
      const double* brow = b + static_cast<std::size_t>(j) * static_cast<std::size_t>(k);
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

// C[m x n] += A[k x m]^T * B[k x n]
void gemm_tn(int m, int k, int n, const double* a, const double* b, double* c) {
  for (int p = 0; p < k; ++p) {
    const double* arow = a + static_cast<std::size_t>(p) * static_cast<std::size_t>(m);
    const double* brow = b + static_cast<std::size_t>(p) * static_cast<std::size_t>(n);
    for (int i = 0; i < m; ++i) {
      const double av = arow[i];
      double* crow = c + static_cast<std::size_t>(i) * static_cast<std::size_t>(n);
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluCubic = 0.044715;

double gelu_forward(double x) {
  const double inner = kGeluScale * (x + kGeluCubic * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(inner));
}

double gelu_derivative(double x) {
  const double inner = kGeluScale * (x + kGeluCubic * x * x * x);
  const double t = std::tanh(inner);
  const double sech2 = 1.0 - t * t;
  const double dinner = kGeluScale * (1.0 + 3.0 * kGeluCubic * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * sech2 * dinner;
}

}  // namespace

namespace detail {

void ensure_grad(TensorNode& node) {
  if (node.grad.size() != node.numel()) node.grad.assign(node.numel(), 0.0);
}

}  // namespace detail

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor Tensor::zeros(const std::vector<int>& shape, bool requires_grad) {
  check_shape_dims(shape, "zeros");
  return Tensor(new_node(shape, std::vector<double>(shape_numel(shape), 0.0), requires_grad));
}

Tensor Tensor::full(const std::vector<int>& shape, double value, bool requires_grad) {
  check_shape_dims(shape, "full");
  return Tensor(new_node(shape, std::vector<double>(shape_numel(shape), value), requires_grad));
}

Tensor Tensor::from_data(const std::vector<int>& shape, std::vector<double> data,
                         bool requires_grad) {
  check_shape_dims(shape, "from_data");
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("from_data: " + shape_str(shape) + " needs " +
                     std::to_string(shape_numel(shape)) + " values, got " +
                     std::to_string(data.size()));
  }
  return Tensor(new_node(shape, std::move(data), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(new_node({1}, {value}, requires_grad));
}

Tensor Tensor::randn(const std::vector<int>& shape, Rng& rng, double stddev, bool requires_grad) {
  check_shape_dims(shape, "randn");
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = rng.normal(0.0, stddev);
  return Tensor(new_node(shape, std::move(data), requires_grad));
}

const std::vector<int>& Tensor::shape() const {
  if (!node_) throw Error("shape() on an undefined tensor");
  return node_->shape;
}

std::size_t Tensor::numel() const { return node_ ? node_->numel() : 0; }

std::vector<double>& Tensor::data() {
  if (!node_) throw Error("data() on an undefined tensor");
  return *node_->values;
}

const std::vector<double>& Tensor::data() const {
  if (!node_) throw Error("data() on an undefined tensor");
  return *node_->values;
}

double Tensor::value() const {
  if (numel() != 1) throw ShapeError("value(): tensor " + shape_str(shape()) + " is not scalar");
  return data()[0];
}

double Tensor::at(std::initializer_list<int> index) const {
  const auto& s = shape();
  if (index.size() != s.size()) {
    throw ShapeError("at(): index rank " + std::to_string(index.size()) + " vs shape " +
                     shape_str(s));
  }
  const auto strides = row_major_strides(s);
  std::size_t flat = 0;
  std::size_t d = 0;
  for (int i : index) {
    if (i < 0 || i >= s[d]) throw ShapeError("at(): index out of range for " + shape_str(s));
    flat += static_cast<std::size_t>(i) * strides[d];
    ++d;
  }
  return data()[flat];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool flag) {
  if (!node_) throw Error("set_requires_grad() on an undefined tensor");
  if (flag && !node_->is_leaf()) {
    throw Error("set_requires_grad: only leaves may change tracking");
  }
  node_->requires_grad = flag;
}

std::vector<double>& Tensor::grad() {
  if (!node_) throw Error("grad() on an undefined tensor");
  detail::ensure_grad(*node_);
  return node_->grad;
}

bool Tensor::has_grad() const { return node_ && node_->grad.size() == node_->numel(); }

void Tensor::zero_grad() {
  if (node_ && !node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() const { sbssl::backward(*this); }

namespace {

void check_suffix_broadcast(const Tensor& a, const Tensor& b, const char* op) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (bs.size() > as.size()) {
    throw ShapeError(std::string(op) + ": " + shape_str(as) + " vs " + shape_str(bs));
  }
  const std::size_t offset = as.size() - bs.size();
  for (std::size_t i = 0; i < bs.size(); ++i) {
    if (as[offset + i] != bs[i]) {
      throw ShapeError(std::string(op) + ": " + shape_str(as) + " vs " + shape_str(bs));
    }
  }
}

enum class EwKind { add, sub, mul };

Tensor elementwise(const Tensor& a, const Tensor& b, EwKind kind, const char* name) {
  check_suffix_broadcast(a, b, name);
  const std::size_t an = a.numel();
  const std::size_t bn = b.numel();
  const auto& av = a.data();
  const auto& bv = b.data();
  std::vector<double> out(an);
  switch (kind) {
    case EwKind::add:
      for (std::size_t i = 0; i < an; ++i) out[i] = av[i] + bv[i % bn];
      break;
    case EwKind::sub:
      for (std::size_t i = 0; i < an; ++i) out[i] = av[i] - bv[i % bn];
      break;
    case EwKind::mul:
      for (std::size_t i = 0; i < an; ++i) out[i] = av[i] * bv[i % bn];
      break;
  }
  auto a_node = a.node();
  auto b_node = b.node();
  return make_op(a.shape(), std::move(out), {&a, &b}, [an, bn, kind](detail::TensorNode& node) {
    auto& pa = *node.parents[0];
    auto& pb = *node.parents[1];
    const auto& g = node.grad;
    detail::ensure_grad(pa);
    detail::ensure_grad(pb);
    const auto& av2 = *pa.values;
    const auto& bv2 = *pb.values;
    switch (kind) {
      case EwKind::add:
        for (std::size_t i = 0; i < an; ++i) {
          pa.grad[i] += g[i];
          pb.grad[i % bn] += g[i];
        }
        break;
      case EwKind::sub:
        for (std::size_t i = 0; i < an; ++i) {
          pa.grad[i] += g[i];
          pb.grad[i % bn] -= g[i];
        }
        break;
      case EwKind::mul:
        for (std::size_t i = 0; i < an; ++i) {
          pa.grad[i] += g[i] * bv2[i % bn];
          pb.grad[i % bn] += g[i] * av2[i];
        }
        break;
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::mul, "mul"); }

Tensor scale(const Tensor& a, double s) {
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * s;
  return make_op(a.shape(), std::move(out), {&a}, [s](detail::TensorNode& node) {
    auto& p = *node.parents[0];
    detail::ensure_grad(p);
    for (std::size_t i = 0; i < node.grad.size(); ++i) p.grad[i] += node.grad[i] * s;
  });
}

Tensor absolute(const Tensor& a) {
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::fabs(av[i]);
  return make_op(a.shape(), std::move(out), {&a}, [](detail::TensorNode& node) {
    auto& p = *node.parents[0];
    detail::ensure_grad(p);
    const auto& x = *p.values;
    // Subgradient 0 at x == 0.
    for (std::size_t i = 0; i < node.grad.size(); ++i) {
      if (x[i] > 0.0) {
        p.grad[i] += node.grad[i];
      } else if (x[i] < 0.0) {
        p.grad[i] -= node.grad[i];
      }
    }
  });
}

Tensor gelu(const Tensor& a) {
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = gelu_forward(av[i]);
  return make_op(a.shape(), std::move(out), {&a}, [](detail::TensorNode& node) {
    auto& p = *node.parents[0];
    detail::ensure_grad(p);
    const auto& x = *p.values;
    for (std::size_t i = 0; i < node.grad.size(); ++i) {
      p.grad[i] += node.grad[i] * gelu_derivative(x[i]);
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (as.size() < 2 || bs.size() < 2) {
    throw ShapeError("matmul: " + shape_str(as) + " x " + shape_str(bs));
  }

  const int k = as.back();
  const int m = as[as.size() - 2];
  const int n = bs.back();
  int batch = 1;

  if (bs.size() == 2) {
    // [*, m, k] x [k, n]: leading dimensions of a fold into the row count.
    if (bs[0] != k) throw ShapeError("matmul: " + shape_str(as) + " x " + shape_str(bs));
    for (std::size_t i = 0; i + 2 < as.size(); ++i) batch *= as[i];
  } else {
    if (as.size() != bs.size() || bs[bs.size() - 2] != k) {
      throw ShapeError("matmul: " + shape_str(as) + " x " + shape_str(bs));
    }
    for (std::size_t i = 0; i + 2 < as.size(); ++i) {
      if (as[i] != bs[i]) throw ShapeError("matmul: " + shape_str(as) + " x " + shape_str(bs));
      batch *= as[i];
    }
  }

  const bool b_is_2d = bs.size() == 2;
  std::vector<int> out_shape(as.begin(), as.end() - 1);
  out_shape.push_back(n);

  const auto& av = a.data();
  const auto& bv = b.data();
  std::vector<double> out(static_cast<std::size_t>(batch) * m * n, 0.0);
  if (b_is_2d) {
    gemm_nn(batch * m, k, n, av.data(), bv.data(), out.data());
  } else {
    for (int t = 0; t < batch; ++t) {
      gemm_nn(m, k, n, av.data() + static_cast<std::size_t>(t) * m * k,
              bv.data() + static_cast<std::size_t>(t) * k * n,
              out.data() + static_cast<std::size_t>(t) * m * n);
    }
  }

  return make_op(std::move(out_shape), std::move(out), {&a, &b},
                 [m, k, n, batch, b_is_2d](detail::TensorNode& node) {
                   auto& pa = *node.parents[0];
                   auto& pb = *node.parents[1];
                   detail::ensure_grad(pa);
                   detail::ensure_grad(pb);
                   const auto& av2 = *pa.values;
                   const auto& bv2 = *pb.values;
                   const auto& g = node.grad;
                   if (b_is_2d) {
                     gemm_nt(batch * m, n, k, g.data(), bv2.data(), pa.grad.data());
                     gemm_tn(k, batch * m, n, av2.data(), g.data(), pb.grad.data());
                   } else {
                     for (int t = 0; t < batch; ++t) {
                       const std::size_t ao = static_cast<std::size_t>(t) * m * k;
                       const std::size_t bo = static_cast<std::size_t>(t) * k * n;
                       const std::size_t go = static_cast<std::size_t>(t) * m * n;
                       gemm_nt(m, n, k, g.data() + go, bv2.data() + bo, pa.grad.data() + ao);
                       gemm_tn(k, m, n, av2.data() + ao, g.data() + go, pb.grad.data() + bo);
                     }
                   }
                 });
}

Tensor softmax_lastdim(const Tensor& a) {
  const auto& as = a.shape();
  if (as.empty()) throw ShapeError("softmax_lastdim: scalar input");
  const std::size_t d = static_cast<std::size_t>(as.back());
  const auto& av = a.data();
  const std::size_t rows = av.size() / d;
  std::vector<double> out(av.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = av.data() + r * d;
    double* o = out.data() + r * d;
    double mx = in[0];
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(in[j])) {
        throw NumericError("softmax_lastdim: non-finite input at row " + std::to_string(r));
      }
      mx = std::max(mx, in[j]);
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      o[j] = std::exp(in[j] - mx);
      denom += o[j];
    }
    for (std::size_t j = 0; j < d; ++j) o[j] /= denom;
  }
  return make_op(as, std::move(out), {&a}, [d, rows](detail::TensorNode& node) {
    auto& p = *node.parents[0];
    detail::ensure_grad(p);
    const auto& y = *node.values;
    const auto& g = node.grad;
    // dx = y * (dy - sum(dy * y)) per row.
    for (std::size_t r = 0; r < rows; ++r) {
      const double* yr = y.data() + r * d;
      const double* gr = g.data() + r * d;
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += gr[j] * yr[j];
      double* xr = p.grad.data() + r * d;
      for (std::size_t j = 0; j < d; ++j) xr[j] += yr[j] * (gr[j] - dot);
    }
  });
}

Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias, double epsilon) {
  const auto& xs = x.shape();
  if (xs.empty()) throw ShapeError("layernorm: scalar input");
  const int d = xs.back();
  if (gain.shape() != std::vector<int>{d} || bias.shape() != std::vector<int>{d}) {
    throw ShapeError("layernorm: input " + shape_str(xs) + " needs gain/bias [" +
                     std::to_string(d) + "], got " + shape_str(gain.shape()) + " and " +
                     shape_str(bias.shape()));
  }
  const auto& xv = x.data();
  const auto& gv = gain.data();
  const auto& bv = bias.data();
  const std::size_t dd = static_cast<std::size_t>(d);
  const std::size_t rows = xv.size() / dd;

  std::vector<double> out(xv.size());
  std::vector<double> x_hat(xv.size());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xv.data() + r * dd;
    double mean = 0.0;
    for (std::size_t j = 0; j < dd; ++j) mean += in[j];
    mean /= static_cast<double>(dd);
    double var = 0.0;
    for (std::size_t j = 0; j < dd; ++j) {
      const double c = in[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(dd);
    const double inv = 1.0 / std::sqrt(var + epsilon);
    inv_std[r] = inv;
    double* xh = x_hat.data() + r * dd;
    double* o = out.data() + r * dd;
    for (std::size_t j = 0; j < dd; ++j) {
      xh[j] = (in[j] - mean) * inv;
      o[j] = gv[j] * xh[j] + bv[j];
    }
  }

  return make_op(xs, std::move(out), {&x, &gain, &bias},
                 [dd, rows, x_hat = std::move(x_hat), inv_std = std::move(inv_std)](
                     detail::TensorNode& node) {
                   auto& px = *node.parents[0];
                   auto& pg = *node.parents[1];
                   auto& pb = *node.parents[2];
                   detail::ensure_grad(px);
                   detail::ensure_grad(pg);
                   detail::ensure_grad(pb);
                   const auto& g = node.grad;
                   const auto& gv2 = *pg.values;
                   for (std::size_t r = 0; r < rows; ++r) {
                     const double* gr = g.data() + r * dd;
                     const double* xh = x_hat.data() + r * dd;
                     double sum_gy = 0.0;
                     double sum_gyx = 0.0;
                     for (std::size_t j = 0; j < dd; ++j) {
                       const double gy = gr[j] * gv2[j];
                       sum_gy += gy;
                       sum_gyx += gy * xh[j];
                       pg.grad[j] += gr[j] * xh[j];
                       pb.grad[j] += gr[j];
                     }
                     const double inv = inv_std[r];
                     const double mean_gy = sum_gy / static_cast<double>(dd);
                     const double mean_gyx = sum_gyx / static_cast<double>(dd);
                     double* dx = px.grad.data() + r * dd;
                     for (std::size_t j = 0; j < dd; ++j) {
                       const double gy = gr[j] * gv2[j];
                       dx[j] += inv * (gy - mean_gy - xh[j] * mean_gyx);
                     }
                   }
                 });
}

Tensor sum_all(const Tensor& a) {
  const auto& av = a.data();
  double total = 0.0;
  for (double v : av) total += v;
  return make_op({1}, {total}, {&a}, [](detail::TensorNode& node) {
    auto& p = *node.parents[0];
    detail::ensure_grad(p);
    const double g = node.grad[0];
    for (double& pg : p.grad) pg += g;
  });
}

Tensor mean_dim0(const Tensor& a) {
  const auto& as = a.shape();
  if (as.empty()) throw ShapeError("mean_dim0: scalar input");
  const int f = as[0];
  std::vector<int> out_shape(as.begin() + 1, as.end());
  if (out_shape.empty()) out_shape = {1};
  const std::size_t inner = shape_numel(out_shape);
  const auto& av = a.data();
  std::vector<double> out(inner, 0.0);
  std::vector<double> column(static_cast<std::size_t>(f));
  for (std::size_t j = 0; j < inner; ++j) {
    for (int i = 0; i < f; ++i) column[static_cast<std::size_t>(i)] = av[static_cast<std::size_t>(i) * inner + j];
    // Sorted fold: addition order no longer depends on the dim-0 order, so
    // the mean is exactly permutation invariant.
    std::sort(column.begin(), column.end());
    double total = 0.0;
    for (double v : column) total += v;
    out[j] = total / static_cast<double>(f);
  }
  return make_op(std::move(out_shape), std::move(out), {&a},
                 [f, inner](detail::TensorNode& node) {
                   auto& p = *node.parents[0];
                   detail::ensure_grad(p);
                   const double invf = 1.0 / static_cast<double>(f);
                   for (int i = 0; i < f; ++i) {
                     for (std::size_t j = 0; j < inner; ++j) {
                       p.grad[static_cast<std::size_t>(i) * inner + j] += node.grad[j] * invf;
                     }
                   }
                 });
}

Tensor max_dim0(const Tensor& a) {
  const auto& as = a.shape();
  if (as.empty()) throw ShapeError("max_dim0: scalar input");
  const int f = as[0];
  std::vector<int> out_shape(as.begin() + 1, as.end());
  if (out_shape.empty()) out_shape = {1};
  const std::size_t inner = shape_numel(out_shape);
  const auto& av = a.data();
  std::vector<double> out(inner);
  std::vector<std::size_t> argmax(inner, 0);
  for (std::size_t j = 0; j < inner; ++j) {
    double best = av[j];
    std::size_t where = 0;
    for (int i = 1; i < f; ++i) {
      const double v = av[static_cast<std::size_t>(i) * inner + j];
      if (v > best) {
        best = v;
        where = static_cast<std::size_t>(i);
      }
    }
    out[j] = best;
    argmax[j] = where;
  }
  return make_op(std::move(out_shape), std::move(out), {&a},
                 [inner, argmax = std::move(argmax)](detail::TensorNode& node) {
                   auto& p = *node.parents[0];
                   detail::ensure_grad(p);
                   for (std::size_t j = 0; j < inner; ++j) {
                     p.grad[argmax[j] * inner + j] += node.grad[j];
                   }
                 });
}

Tensor reshape(const Tensor& a, const std::vector<int>& shape) {
  check_shape_dims(shape, "reshape");
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape: " + shape_str(a.shape()) + " to " + shape_str(shape));
  }
  // Row-major layout is unchanged; the buffer is copied so downstream writes
  // to gradients stay per-node.
  std::vector<double> out = a.data();
  return make_op(shape, std::move(out), {&a}, [](detail::TensorNode& node) {
    auto& p = *node.parents[0];
    detail::ensure_grad(p);
    for (std::size_t i = 0; i < node.grad.size(); ++i) p.grad[i] += node.grad[i];
  });
}

namespace {

/// flat index mapping for permute: out multi-index od -> in flat offset.
std::vector<std::size_t> permute_map(const std::vector<int>& in_shape,
                                     const std::vector<int>& perm) {
  const std::size_t rank = in_shape.size();
  std::vector<int> out_shape(rank);
  for (std::size_t d = 0; d < rank; ++d) out_shape[d] = in_shape[static_cast<std::size_t>(perm[d])];
  const auto in_strides = row_major_strides(in_shape);
  const std::size_t n = shape_numel(in_shape);
  std::vector<std::size_t> map(n);
  std::vector<int> idx(rank, 0);
  for (std::size_t o = 0; o < n; ++o) {
    std::size_t src = 0;
    for (std::size_t d = 0; d < rank; ++d) {
      src += static_cast<std::size_t>(idx[d]) * in_strides[static_cast<std::size_t>(perm[d])];
    }
    map[o] = src;
    for (int d = static_cast<int>(rank) - 1; d >= 0; --d) {
      if (++idx[static_cast<std::size_t>(d)] < out_shape[static_cast<std::size_t>(d)]) break;
      idx[static_cast<std::size_t>(d)] = 0;
    }
  }
  return map;
}

}  // namespace

Tensor permute(const Tensor& a, const std::vector<int>& perm) {
  const auto& as = a.shape();
  if (perm.size() != as.size()) {
    throw ShapeError("permute: order size " + std::to_string(perm.size()) + " vs " +
                     shape_str(as));
  }
  std::vector<bool> seen(as.size(), false);
  for (int p : perm) {
    if (p < 0 || p >= static_cast<int>(as.size()) || seen[static_cast<std::size_t>(p)]) {
      throw ShapeError("permute: invalid order for " + shape_str(as));
    }
    seen[static_cast<std::size_t>(p)] = true;
  }
  std::vector<int> out_shape(as.size());
  for (std::size_t d = 0; d < as.size(); ++d) out_shape[d] = as[static_cast<std::size_t>(perm[d])];
  auto map = permute_map(as, perm);
  const auto& av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t o = 0; o < out.size(); ++o) out[o] = av[map[o]];
  return make_op(std::move(out_shape), std::move(out), {&a},
                 [map = std::move(map)](detail::TensorNode& node) {
                   auto& p = *node.parents[0];
                   detail::ensure_grad(p);
                   for (std::size_t o = 0; o < node.grad.size(); ++o) {
                     p.grad[map[o]] += node.grad[o];
                   }
                 });
}

Tensor transpose_last2(const Tensor& a) {
  const int r = a.rank();
  if (r < 2) throw ShapeError("transpose_last2: " + shape_str(a.shape()));
  std::vector<int> perm(static_cast<std::size_t>(r));
  std::iota(perm.begin(), perm.end(), 0);
  std::swap(perm[static_cast<std::size_t>(r) - 1], perm[static_cast<std::size_t>(r) - 2]);
  return permute(a, perm);
}

Tensor concat(const Tensor& a, const Tensor& b, int dim) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (as.size() != bs.size() || dim < 0 || dim >= static_cast<int>(as.size())) {
    throw ShapeError("concat: " + shape_str(as) + " with " + shape_str(bs) + " at dim " +
                     std::to_string(dim));
  }
  for (std::size_t d = 0; d < as.size(); ++d) {
    if (static_cast<int>(d) != dim && as[d] != bs[d]) {
      throw ShapeError("concat: " + shape_str(as) + " with " + shape_str(bs) + " at dim " +
                       std::to_string(dim));
    }
  }
  std::size_t outer = 1;
  for (int d = 0; d < dim; ++d) outer *= static_cast<std::size_t>(as[static_cast<std::size_t>(d)]);
  std::size_t inner = 1;
  for (std::size_t d = static_cast<std::size_t>(dim) + 1; d < as.size(); ++d) inner *= static_cast<std::size_t>(as[d]);
  const std::size_t a_block = static_cast<std::size_t>(as[static_cast<std::size_t>(dim)]) * inner;
  const std::size_t b_block = static_cast<std::size_t>(bs[static_cast<std::size_t>(dim)]) * inner;

  std::vector<int> out_shape = as;
  out_shape[static_cast<std::size_t>(dim)] += bs[static_cast<std::size_t>(dim)];
  const auto& av = a.data();
  const auto& bv = b.data();
  std::vector<double> out(av.size() + bv.size());
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(av.data() + o * a_block, a_block, out.data() + o * (a_block + b_block));
    std::copy_n(bv.data() + o * b_block, b_block, out.data() + o * (a_block + b_block) + a_block);
  }
  return make_op(std::move(out_shape), std::move(out), {&a, &b},
                 [outer, a_block, b_block](detail::TensorNode& node) {
                   auto& pa = *node.parents[0];
                   auto& pb = *node.parents[1];
                   detail::ensure_grad(pa);
                   detail::ensure_grad(pb);
                   const auto& g = node.grad;
                   for (std::size_t o = 0; o < outer; ++o) {
                     const double* src = g.data() + o * (a_block + b_block);
                     for (std::size_t i = 0; i < a_block; ++i) pa.grad[o * a_block + i] += src[i];
                     for (std::size_t i = 0; i < b_block; ++i) {
                       pb.grad[o * b_block + i] += src[a_block + i];
                     }
                   }
                 });
}

Tensor slice(const Tensor& a, int dim, int start, int length) {
  const auto& as = a.shape();
  if (dim < 0 || dim >= static_cast<int>(as.size()) || start < 0 || length <= 0 ||
      start + length > as[static_cast<std::size_t>(dim)]) {
    throw ShapeError("slice: dim " + std::to_string(dim) + " [" + std::to_string(start) + "," +
                     std::to_string(start + length) + ") of " + shape_str(as));
  }
  std::size_t outer = 1;
  for (int d = 0; d < dim; ++d) outer *= static_cast<std::size_t>(as[static_cast<std::size_t>(d)]);
  std::size_t inner = 1;
  for (std::size_t d = static_cast<std::size_t>(dim) + 1; d < as.size(); ++d) inner *= static_cast<std::size_t>(as[d]);
  const std::size_t in_block = static_cast<std::size_t>(as[static_cast<std::size_t>(dim)]) * inner;
  const std::size_t out_block = static_cast<std::size_t>(length) * inner;
  const std::size_t skip = static_cast<std::size_t>(start) * inner;

  std::vector<int> out_shape = as;
  out_shape[static_cast<std::size_t>(dim)] = length;
  const auto& av = a.data();
  std::vector<double> out(outer * out_block);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(av.data() + o * in_block + skip, out_block, out.data() + o * out_block);
  }
  return make_op(std::move(out_shape), std::move(out), {&a},
                 [outer, in_block, out_block, skip](detail::TensorNode& node) {
                   auto& p = *node.parents[0];
                   detail::ensure_grad(p);
                   const auto& g = node.grad;
                   for (std::size_t o = 0; o < outer; ++o) {
                     for (std::size_t i = 0; i < out_block; ++i) {
                       p.grad[o * in_block + skip + i] += g[o * out_block + i];
                     }
                   }
                 });
}

Tensor tile_leading(const Tensor& a, int copies) {
  if (copies <= 0) throw ShapeError("tile_leading: copies must be positive");
  std::vector<int> out_shape;
  out_shape.reserve(a.shape().size() + 1);
  out_shape.push_back(copies);
  for (int d : a.shape()) out_shape.push_back(d);
  const auto& av = a.data();
  std::vector<double> out(av.size() * static_cast<std::size_t>(copies));
  for (int c = 0; c < copies; ++c) {
    std::copy(av.begin(), av.end(), out.begin() + static_cast<std::ptrdiff_t>(av.size()) * c);
  }
  const std::size_t block = av.size();
  return make_op(std::move(out_shape), std::move(out), {&a},
                 [copies, block](detail::TensorNode& node) {
                   auto& p = *node.parents[0];
                   detail::ensure_grad(p);
                   for (int c = 0; c < copies; ++c) {
                     const double* g = node.grad.data() + static_cast<std::size_t>(c) * block;
                     for (std::size_t i = 0; i < block; ++i) p.grad[i] += g[i];
                   }
                 });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw ShapeError("stack_rows: empty input");
  const auto& s0 = rows[0].shape();
  for (const Tensor& t : rows) {
    if (t.shape() != s0) {
      throw ShapeError("stack_rows: " + shape_str(t.shape()) + " vs " + shape_str(s0));
    }
  }
  std::vector<int> out_shape;
  out_shape.reserve(s0.size() + 1);
  out_shape.push_back(static_cast<int>(rows.size()));
  for (int d : s0) out_shape.push_back(d);

  const std::size_t block = rows[0].numel();
  std::vector<double> out(block * rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& rv = rows[r].data();
    std::copy(rv.begin(), rv.end(), out.begin() + static_cast<std::ptrdiff_t>(r * block));
  }

  bool tracked = g_grad_enabled;
  if (tracked) {
    tracked = false;
    for (const Tensor& t : rows) tracked = tracked || t.requires_grad();
  }
  auto node = new_node(std::move(out_shape), std::move(out), tracked);
  if (tracked) {
    node->parents.reserve(rows.size());
    for (const Tensor& t : rows) node->parents.push_back(t.node());
    node->backward_fn = [block](detail::TensorNode& n) {
      for (std::size_t r = 0; r < n.parents.size(); ++r) {
        auto& p = *n.parents[r];
        detail::ensure_grad(p);
        const double* g = n.grad.data() + r * block;
        for (std::size_t i = 0; i < block; ++i) p.grad[i] += g[i];
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor cross_entropy_logits(const Tensor& logits, const std::vector<int>& labels) {
  const auto& ls = logits.shape();
  if (ls.size() != 2) throw ShapeError("cross_entropy_logits: logits " + shape_str(ls));
  const int batch = ls[0];
  const int classes = ls[1];
  if (static_cast<int>(labels.size()) != batch) {
    throw ShapeError("cross_entropy_logits: " + std::to_string(labels.size()) + " labels for " +
                     shape_str(ls));
  }
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw NumericError("cross_entropy_logits: label " + std::to_string(y) + " out of range");
    }
  }
  const auto& lv = logits.data();
  std::vector<double> probs(lv.size());
  double loss = 0.0;
  for (int i = 0; i < batch; ++i) {
    const double* row = lv.data() + static_cast<std::size_t>(i) * classes;
    double mx = row[0];
    for (int c = 0; c < classes; ++c) {
      if (!std::isfinite(row[c])) {
        throw NumericError("cross_entropy_logits: non-finite logit in row " + std::to_string(i));
      }
      mx = std::max(mx, row[c]);
    }
    double denom = 0.0;
    double* pr = probs.data() + static_cast<std::size_t>(i) * classes;
    for (int c = 0; c < classes; ++c) {
      pr[c] = std::exp(row[c] - mx);
      denom += pr[c];
    }
    for (int c = 0; c < classes; ++c) pr[c] /= denom;
    loss -= std::log(pr[labels[static_cast<std::size_t>(i)]]);
  }
  loss /= static_cast<double>(batch);

  return make_op({1}, {loss}, {&logits},
                 [batch, classes, labels, probs = std::move(probs)](detail::TensorNode& node) {
                   auto& p = *node.parents[0];
                   detail::ensure_grad(p);
                   const double g = node.grad[0] / static_cast<double>(batch);
                   for (int i = 0; i < batch; ++i) {
                     const double* pr = probs.data() + static_cast<std::size_t>(i) * classes;
                     double* dst = p.grad.data() + static_cast<std::size_t>(i) * classes;
                     for (int c = 0; c < classes; ++c) {
                       const double onehot = (c == labels[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
                       dst[c] += g * (pr[c] - onehot);
                     }
                   }
                 });
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw Error("backward: undefined tensor");
  if (loss.numel() != 1) {
    throw NumericError("backward: expected scalar loss, got " + shape_str(loss.shape()));
  }
  auto root = loss.node();

  // Iterative post-order DFS: node appended after its parents, so reverse
  // iteration visits each node before anything it feeds.
  std::vector<detail::TensorNode*> order;
  std::vector<std::pair<detail::TensorNode*, std::size_t>> stack;
  std::unordered_set<detail::TensorNode*> seen;
  auto mark_seen = [&seen](detail::TensorNode* n) { return seen.insert(n).second; };
  if (mark_seen(root.get())) stack.emplace_back(root.get(), 0);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::TensorNode* parent = node->parents[next].get();
      ++next;
      if (mark_seen(parent)) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Intermediates start each pass at zero; leaf gradients persist so repeated
  // backward calls accumulate (mini-batch style).
  for (detail::TensorNode* node : order) {
    detail::ensure_grad(*node);
    if (!node->is_leaf()) std::fill(node->grad.begin(), node->grad.end(), 0.0);
  }
  root->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorNode* node = *it;
    if (node->backward_fn) node->backward_fn(*node);
  }
}

}  // namespace sbssl
