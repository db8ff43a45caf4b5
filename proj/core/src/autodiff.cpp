// Copyright 2026 The pcssl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pcssl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "pcssl/error.hpp"
#include "pcssl/random.hpp"

namespace pcssl::ad {

std::string Shape::str() const {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

Matrix::Matrix(Shape s, std::vector<double> values) : shape(s), data(std::move(values)) {
  if (data.size() != shape.size()) {
    throw ShapeError("matrix " + shape.str() + " given " + std::to_string(data.size()) + " values");
  }
}

std::vector<double>& Node::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on non-scalar tensor " + shape().str());
  return node_->value[0];
}

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(node_->value.size(), 0.0);
  return node_->grad;
}

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape().str() + " and " +
                   b.shape().str());
}

/// New node fed by `inputs`. The backward closure is only kept when some
/// input carries gradient.
Tensor make(Shape shape, const char* op, std::vector<Tensor> inputs,
            std::vector<double> value = {}) {
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->op = op;
  node->value = value.empty() ? std::vector<double>(shape.size(), 0.0) : std::move(value);
  for (const auto& in : inputs) node->requires_grad = node->requires_grad || in.requires_grad();
  if (node->requires_grad) node->inputs = std::move(inputs);
  return Tensor(std::move(node));
}

void attach(Tensor& out, std::function<void(Node&)> fn) {
  if (out.requires_grad()) out.node().backward = std::move(fn);
}

bool wants(const Tensor& t) { return t.defined() && t.requires_grad(); }

void check_axis(int axis, const char* op) {
  if (axis != 0 && axis != 1) throw ShapeError(std::string(op) + ": axis must be 0 or 1");
}

}  // namespace

// -- leaves -----------------------------------------------------------------

Tensor constant(Shape shape, std::vector<double> values) {
  if (values.size() != shape.size()) {
    throw ShapeError("constant " + shape.str() + " given " + std::to_string(values.size()) +
                     " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->value = std::move(values);
  node->op = "constant";
  return Tensor(std::move(node));
}

Tensor constant(const Matrix& m) { return constant(m.shape, m.data); }

Tensor scalar(double v) { return constant({1, 1}, {v}); }

Tensor variable(Shape shape, std::vector<double> values) {
  Tensor t = constant(shape, std::move(values));
  t.node().requires_grad = true;
  t.node().op = "variable";
  return t;
}

// -- elementwise ------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  const Shape sa = a.shape(), sb = b.shape();
  const bool row_bcast = sb.rows == 1 && sb.cols == sa.cols && sa.rows != 1;
  if (!(sa == sb) && !row_bcast) shape_error("add", a, b);
  Tensor out = make(sa, "add", {a, b});
  auto& y = out.node().value;
  const auto& av = a.node().value;
  const auto& bv = b.node().value;
  const std::size_t c = sa.cols;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[row_bcast ? i % c : i];
  attach(out, [row_bcast, c](Node& n) {
    const Tensor& a = n.inputs[0];
    const Tensor& b = n.inputs[1];
    if (wants(a)) {
      auto& ga = a.node().grad_buffer();
      for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i];
    }
    if (wants(b)) {
      auto& gb = b.node().grad_buffer();
      for (std::size_t i = 0; i < n.grad.size(); ++i) gb[row_bcast ? i % c : i] += n.grad[i];
    }
  });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const Shape sa = a.shape(), sb = b.shape();
  const bool row_bcast = sb.rows == 1 && sb.cols == sa.cols && sa.rows != 1;
  if (!(sa == sb) && !row_bcast) shape_error("sub", a, b);
  Tensor out = make(sa, "sub", {a, b});
  auto& y = out.node().value;
  const auto& av = a.node().value;
  const auto& bv = b.node().value;
  const std::size_t c = sa.cols;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] - bv[row_bcast ? i % c : i];
  attach(out, [row_bcast, c](Node& n) {
    const Tensor& a = n.inputs[0];
    const Tensor& b = n.inputs[1];
    if (wants(a)) {
      auto& ga = a.node().grad_buffer();
      for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i];
    }
    if (wants(b)) {
      auto& gb = b.node().grad_buffer();
      for (std::size_t i = 0; i < n.grad.size(); ++i) gb[row_bcast ? i % c : i] -= n.grad[i];
    }
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const Shape sa = a.shape(), sb = b.shape();
  enum { kSame, kRow, kCol } mode;
  if (sa == sb) {
    mode = kSame;
  } else if (sb.rows == 1 && sb.cols == sa.cols) {
    mode = kRow;
  } else if (sb.cols == 1 && sb.rows == sa.rows) {
    mode = kCol;
  } else {
    shape_error("mul", a, b);
  }
  const std::size_t c = sa.cols;
  auto bidx = [mode, c](std::size_t i) {
    return mode == kSame ? i : (mode == kRow ? i % c : i / c);
  };
  Tensor out = make(sa, "mul", {a, b});
  auto& y = out.node().value;
  const auto& av = a.node().value;
  const auto& bv = b.node().value;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[bidx(i)];
  attach(out, [bidx](Node& n) {
    const Tensor& a = n.inputs[0];
    const Tensor& b = n.inputs[1];
    const auto& av = a.node().value;
    const auto& bv = b.node().value;
    if (wants(a)) {
      auto& ga = a.node().grad_buffer();
      for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i] * bv[bidx(i)];
    }
    if (wants(b)) {
      auto& gb = b.node().grad_buffer();
      for (std::size_t i = 0; i < n.grad.size(); ++i) gb[bidx(i)] += n.grad[i] * av[i];
    }
  });
  return out;
}

Tensor scalar_mul(const Tensor& a, double s) {
  Tensor out = make(a.shape(), "scalar_mul", {a});
  auto& y = out.node().value;
  const auto& av = a.node().value;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = s * av[i];
  attach(out, [s](Node& n) {
    auto& ga = n.inputs[0].node().grad_buffer();
    for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += s * n.grad[i];
  });
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out = make(a.shape(), "relu", {a});
  auto& y = out.node().value;
  const auto& av = a.node().value;
  // NaN passes through so a poisoned forward pass is still detected
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] > 0.0 || std::isnan(av[i]) ? av[i] : 0.0;
  attach(out, [](Node& n) {
    const auto& av = n.inputs[0].node().value;
    auto& ga = n.inputs[0].node().grad_buffer();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      if (av[i] > 0.0) ga[i] += n.grad[i];
    }
  });
  return out;
}

Tensor exp(const Tensor& a) {
  Tensor out = make(a.shape(), "exp", {a});
  auto& y = out.node().value;
  const auto& av = a.node().value;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::exp(av[i]);
  attach(out, [](Node& n) {
    auto& ga = n.inputs[0].node().grad_buffer();
    for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i] * n.value[i];
  });
  return out;
}

Tensor log(const Tensor& a, double floor, std::size_t* clamped) {
  Tensor out = make(a.shape(), "log", {a});
  auto& y = out.node().value;
  const auto& av = a.node().value;
  std::size_t count = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (floor > 0.0 && av[i] < floor) {
      y[i] = std::log(floor);
      ++count;
    } else {
      y[i] = std::log(av[i]);
    }
  }
  if (clamped) *clamped += count;
  attach(out, [floor](Node& n) {
    const auto& av = n.inputs[0].node().value;
    auto& ga = n.inputs[0].node().grad_buffer();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      if (floor > 0.0 && av[i] < floor) continue;
      ga[i] += n.grad[i] / av[i];
    }
  });
  return out;
}

// -- linear algebra -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor out = make({n, m}, "matmul", {a, b});
  auto& y = out.node().value;
  const auto& av = a.node().value;
  const auto& bv = b.node().value;
  for (std::size_t i = 0; i < n; ++i) {
    double* yr = &y[i * m];
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      const double* br = &bv[p * m];
      for (std::size_t j = 0; j < m; ++j) yr[j] += aip * br[j];
    }
  }
  attach(out, [n, k, m](Node& node) {
    const Tensor& a = node.inputs[0];
    const Tensor& b = node.inputs[1];
    const auto& av = a.node().value;
    const auto& bv = b.node().value;
    const auto& g = node.grad;
    if (wants(a)) {
      auto& ga = a.node().grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          const double* br = &bv[p * m];
          const double* gr = &g[i * m];
          for (std::size_t j = 0; j < m; ++j) acc += gr[j] * br[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (wants(b)) {
      auto& gb = b.node().grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        const double* gr = &g[i * m];
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          double* gbr = &gb[p * m];
          for (std::size_t j = 0; j < m; ++j) gbr[j] += aip * gr[j];
        }
      }
    }
  });
  return out;
}

Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out = make({c, r}, "transpose", {a});
  auto& y = out.node().value;
  const auto& av = a.node().value;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) y[j * r + i] = av[i * c + j];
  attach(out, [r, c](Node& n) {
    auto& ga = n.inputs[0].node().grad_buffer();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += n.grad[j * r + i];
  });
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.cols() != w.rows()) shape_error("linear (x, W)", x, w);
  if (b.rows() != 1 || b.cols() != w.cols()) shape_error("linear (W, b)", w, b);
  const std::size_t n = x.rows(), in = x.cols(), out_dim = w.cols();
  Tensor out = make({n, out_dim}, "linear", {x, w, b});
  auto& y = out.node().value;
  const auto& xv = x.node().value;
  const auto& wv = w.node().value;
  const auto& bv = b.node().value;
  for (std::size_t i = 0; i < n; ++i) {
    double* yr = &y[i * out_dim];
    std::copy(bv.begin(), bv.end(), yr);
    for (std::size_t p = 0; p < in; ++p) {
      const double xip = xv[i * in + p];
      if (xip == 0.0) continue;
      const double* wr = &wv[p * out_dim];
      for (std::size_t j = 0; j < out_dim; ++j) yr[j] += xip * wr[j];
    }
  }
  attach(out, [n, in, out_dim](Node& node) {
    const Tensor& x = node.inputs[0];
    const Tensor& w = node.inputs[1];
    const Tensor& b = node.inputs[2];
    const auto& g = node.grad;
    if (wants(x)) {
      const auto& wv = w.node().value;
      auto& gx = x.node().grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        const double* gr = &g[i * out_dim];
        for (std::size_t p = 0; p < in; ++p) {
          const double* wr = &wv[p * out_dim];
          double acc = 0.0;
          for (std::size_t j = 0; j < out_dim; ++j) acc += gr[j] * wr[j];
          gx[i * in + p] += acc;
        }
      }
    }
    if (wants(w)) {
      const auto& xv = x.node().value;
      auto& gw = w.node().grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        const double* gr = &g[i * out_dim];
        for (std::size_t p = 0; p < in; ++p) {
          const double xip = xv[i * in + p];
          if (xip == 0.0) continue;
          double* gwr = &gw[p * out_dim];
          for (std::size_t j = 0; j < out_dim; ++j) gwr[j] += xip * gr[j];
        }
      }
    }
    if (wants(b)) {
      auto& gb = b.node().grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < out_dim; ++j) gb[j] += g[i * out_dim + j];
    }
  });
  return out;
}

// -- reductions -------------------------------------------------------------

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.node().value) acc += v;
  Tensor out = make({1, 1}, "sum", {a}, {acc});
  attach(out, [](Node& n) {
    auto& ga = n.inputs[0].node().grad_buffer();
    for (auto& g : ga) g += n.grad[0];
  });
  return out;
}

Tensor sum(const Tensor& a, int axis) {
  check_axis(axis, "sum");
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out = make(axis == 0 ? Shape{1, c} : Shape{r, 1}, "sum_axis", {a});
  auto& y = out.node().value;
  const auto& av = a.node().value;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) y[axis == 0 ? j : i] += av[i * c + j];
  attach(out, [r, c, axis](Node& n) {
    auto& ga = n.inputs[0].node().grad_buffer();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += n.grad[axis == 0 ? j : i];
  });
  return out;
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw ShapeError("mean of empty tensor");
  return scalar_mul(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor softmax(const Tensor& a, int axis) {
  check_axis(axis, "softmax");
  const std::size_t r = a.rows(), c = a.cols();
  // Slices run along `len` entries spaced by `stride`.
  const std::size_t slices = axis == 1 ? r : c;
  const std::size_t len = axis == 1 ? c : r;
  const std::size_t stride = axis == 1 ? 1 : c;
  auto base = [axis, c](std::size_t s) { return axis == 1 ? s * c : s; };

  Tensor out = make(a.shape(), "softmax", {a});
  auto& y = out.node().value;
  const auto& av = a.node().value;
  for (std::size_t s = 0; s < slices; ++s) {
    const std::size_t b0 = base(s);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < len; ++t) mx = std::max(mx, av[b0 + t * stride]);
    double z = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      const double e = std::exp(av[b0 + t * stride] - mx);
      y[b0 + t * stride] = e;
      z += e;
    }
    for (std::size_t t = 0; t < len; ++t) y[b0 + t * stride] /= z;
  }
  attach(out, [slices, len, stride, base](Node& n) {
    auto& ga = n.inputs[0].node().grad_buffer();
    for (std::size_t s = 0; s < slices; ++s) {
      const std::size_t b0 = base(s);
      double dot = 0.0;
      for (std::size_t t = 0; t < len; ++t) {
        const std::size_t i = b0 + t * stride;
        dot += n.grad[i] * n.value[i];
      }
      for (std::size_t t = 0; t < len; ++t) {
        const std::size_t i = b0 + t * stride;
        ga[i] += n.value[i] * (n.grad[i] - dot);
      }
    }
  });
  return out;
}

Tensor l2_normalize(const Tensor& a, int axis, double min_norm) {
  check_axis(axis, "l2_normalize");
  const std::size_t r = a.rows(), c = a.cols();
  const std::size_t slices = axis == 1 ? r : c;
  const std::size_t len = axis == 1 ? c : r;
  const std::size_t stride = axis == 1 ? 1 : c;
  auto base = [axis, c](std::size_t s) { return axis == 1 ? s * c : s; };

  Tensor out = make(a.shape(), "l2_normalize", {a});
  auto& y = out.node().value;
  const auto& av = a.node().value;
  std::vector<double> norms(slices);
  for (std::size_t s = 0; s < slices; ++s) {
    const std::size_t b0 = base(s);
    double ss = 0.0;
    for (std::size_t t = 0; t < len; ++t) ss += av[b0 + t * stride] * av[b0 + t * stride];
    const double nrm = std::sqrt(ss);
    if (!std::isfinite(nrm)) {
      throw EvaluationError("l2_normalize: slice " + std::to_string(s) + " is not finite");
    }
    if (!(nrm >= min_norm)) {
      throw DegenerateEmbeddingError("l2_normalize: slice " + std::to_string(s) +
                                     " has norm " + std::to_string(nrm));
    }
    norms[s] = nrm;
    for (std::size_t t = 0; t < len; ++t) y[b0 + t * stride] = av[b0 + t * stride] / nrm;
  }
  attach(out, [slices, len, stride, base, norms = std::move(norms)](Node& n) {
    auto& ga = n.inputs[0].node().grad_buffer();
    for (std::size_t s = 0; s < slices; ++s) {
      const std::size_t b0 = base(s);
      double dot = 0.0;
      for (std::size_t t = 0; t < len; ++t) {
        const std::size_t i = b0 + t * stride;
        dot += n.grad[i] * n.value[i];
      }
      for (std::size_t t = 0; t < len; ++t) {
        const std::size_t i = b0 + t * stride;
        ga[i] += (n.grad[i] - n.value[i] * dot) / norms[s];
      }
    }
  });
  return out;
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                  Tensor& running_var, BnMode mode, double momentum, double eps) {
  const std::size_t n = x.rows(), c = x.cols();
  const Shape row{1, c};
  if (!(gamma.shape() == row)) shape_error("batch_norm (x, gamma)", x, gamma);
  if (!(beta.shape() == row)) shape_error("batch_norm (x, beta)", x, beta);
  if (!(running_mean.shape() == row)) shape_error("batch_norm (x, running_mean)", x, running_mean);
  if (!(running_var.shape() == row)) shape_error("batch_norm (x, running_var)", x, running_var);
  if (n == 0) throw ShapeError("batch_norm on empty batch");

  const auto& xv = x.node().value;
  std::vector<double> mu(c, 0.0), inv_std(c, 0.0);
  if (mode == BnMode::kTrain) {
    std::vector<double> var(c, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) mu[j] += xv[i * c + j];
    for (auto& m : mu) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const double d = xv[i * c + j] - mu[j];
        var[j] += d * d;
      }
    auto rm = running_mean.values();
    auto rv = running_var.values();
    for (std::size_t j = 0; j < c; ++j) {
      const double biased = var[j] / static_cast<double>(n);
      const double unbiased = n > 1 ? var[j] / static_cast<double>(n - 1) : biased;
      inv_std[j] = 1.0 / std::sqrt(biased + eps);
      rm[j] = momentum * rm[j] + (1.0 - momentum) * mu[j];
      rv[j] = momentum * rv[j] + (1.0 - momentum) * unbiased;
    }
  } else {
    const auto rm = running_mean.values();
    const auto rv = running_var.values();
    for (std::size_t j = 0; j < c; ++j) {
      mu[j] = rm[j];
      inv_std[j] = 1.0 / std::sqrt(rv[j] + eps);
    }
  }

  Tensor out = make(x.shape(), "batch_norm", {x, gamma, beta});
  auto& y = out.node().value;
  std::vector<double> xhat(n * c);
  const auto& gv = gamma.node().value;
  const auto& bv = beta.node().value;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const std::size_t idx = i * c + j;
      xhat[idx] = (xv[idx] - mu[j]) * inv_std[j];
      y[idx] = gv[j] * xhat[idx] + bv[j];
    }

  attach(out, [n, c, mode, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& node) {
    const Tensor& x = node.inputs[0];
    const Tensor& gamma = node.inputs[1];
    const Tensor& beta = node.inputs[2];
    const auto& g = node.grad;
    if (wants(gamma)) {
      auto& gg = gamma.node().grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) gg[j] += g[i * c + j] * xhat[i * c + j];
    }
    if (wants(beta)) {
      auto& gb = beta.node().grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
    }
    if (wants(x)) {
      const auto& gv = gamma.node().value;
      auto& gx = x.node().grad_buffer();
      if (mode == BnMode::kEval) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[i * c + j] * gv[j] * inv_std[j];
        return;
      }
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t j = 0; j < c; ++j) {
        double sum_d = 0.0, sum_dx = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = g[i * c + j] * gv[j];
          sum_d += d;
          sum_dx += d * xhat[i * c + j];
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double d = g[i * c + j] * gv[j];
          gx[i * c + j] += inv_std[j] * (d - inv_n * sum_d - xhat[i * c + j] * inv_n * sum_dx);
        }
      }
    }
  });
  return out;
}

// -- indexing ---------------------------------------------------------------

Tensor max_pool(const Tensor& x, std::span<const std::size_t> groups, std::size_t k) {
  if (k == 0 || groups.size() % k != 0) {
    throw ShapeError("max_pool: group list of " + std::to_string(groups.size()) +
                     " is not a multiple of k=" + std::to_string(k));
  }
  const std::size_t m = groups.size() / k, c = x.cols();
  for (auto r : groups) {
    if (r >= x.rows()) throw ShapeError("max_pool: row " + std::to_string(r) + " out of range for " + x.shape().str());
  }
  Tensor out = make({m, c}, "max_pool", {x});
  auto& y = out.node().value;
  const auto& xv = x.node().value;
  std::vector<std::size_t> argmax(m * c);
  for (std::size_t g = 0; g < m; ++g) {
    for (std::size_t j = 0; j < c; ++j) {
      std::size_t best = groups[g * k];
      double bv = xv[best * c + j];
      for (std::size_t t = 1; t < k; ++t) {
        const std::size_t r = groups[g * k + t];
        if (xv[r * c + j] > bv || (std::isnan(xv[r * c + j]) && !std::isnan(bv))) {
          bv = xv[r * c + j];
          best = r;
        }
      }
      y[g * c + j] = bv;
      argmax[g * c + j] = best;
    }
  }
  attach(out, [m, c, argmax = std::move(argmax)](Node& n) {
    auto& gx = n.inputs[0].node().grad_buffer();
    for (std::size_t g = 0; g < m; ++g)
      for (std::size_t j = 0; j < c; ++j) gx[argmax[g * c + j] * c + j] += n.grad[g * c + j];
  });
  return out;
}

Tensor gather(const Tensor& x, std::span<const std::size_t> rows) {
  const std::size_t c = x.cols();
  for (auto r : rows) {
    if (r >= x.rows()) {
      throw ShapeError("gather: row " + std::to_string(r) + " out of range for " + x.shape().str());
    }
  }
  Tensor out = make({rows.size(), c}, "gather", {x});
  auto& y = out.node().value;
  const auto& xv = x.node().value;
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(&xv[rows[i] * c], c, &y[i * c]);
  attach(out, [c, idx = std::vector<std::size_t>(rows.begin(), rows.end())](Node& n) {
    auto& gx = n.inputs[0].node().grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) gx[idx[i] * c + j] += n.grad[i * c + j];
  });
  return out;
}

Tensor segment_sum(const Tensor& x, std::size_t k) {
  if (k == 0 || x.rows() % k != 0) {
    throw ShapeError("segment_sum: " + x.shape().str() + " rows not divisible by k=" +
                     std::to_string(k));
  }
  const std::size_t m = x.rows() / k, c = x.cols();
  Tensor out = make({m, c}, "segment_sum", {x});
  auto& y = out.node().value;
  const auto& xv = x.node().value;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < c; ++j) y[(i / k) * c + j] += xv[i * c + j];
  attach(out, [k, c](Node& n) {
    auto& gx = n.inputs[0].node().grad_buffer();
    for (std::size_t i = 0; i < gx.size() / c; ++i)
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += n.grad[(i / k) * c + j];
  });
  return out;
}

Tensor concat(std::span<const Tensor> parts, int axis) {
  check_axis(axis, "concat");
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  Shape s = parts[0].shape();
  for (std::size_t p = 1; p < parts.size(); ++p) {
    const Shape& q = parts[p].shape();
    if (axis == 0) {
      if (q.cols != s.cols) shape_error("concat(axis=0)", parts[0], parts[p]);
      s.rows += q.rows;
    } else {
      if (q.rows != s.rows) shape_error("concat(axis=1)", parts[0], parts[p]);
      s.cols += q.cols;
    }
  }
  Tensor out = make(s, "concat", std::vector<Tensor>(parts.begin(), parts.end()));
  auto& y = out.node().value;
  // offset of each part along the concatenation axis
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const auto& pv = p.node().value;
    if (axis == 0) {
      std::copy(pv.begin(), pv.end(), y.begin() + static_cast<long>(off * s.cols));
      off += p.rows();
    } else {
      for (std::size_t i = 0; i < s.rows; ++i)
        std::copy_n(&pv[i * p.cols()], p.cols(), &y[i * s.cols + off]);
      off += p.cols();
    }
  }
  attach(out, [axis, s, offsets = std::move(offsets)](Node& n) {
    for (std::size_t p = 0; p < n.inputs.size(); ++p) {
      const Tensor& in = n.inputs[p];
      if (!wants(in)) continue;
      auto& gi = in.node().grad_buffer();
      if (axis == 0) {
        for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += n.grad[offsets[p] * s.cols + i];
      } else {
        const std::size_t pc = in.cols();
        for (std::size_t i = 0; i < s.rows; ++i)
          for (std::size_t j = 0; j < pc; ++j) gi[i * pc + j] += n.grad[i * s.cols + offsets[p] + j];
      }
    }
  });
  return out;
}

Tensor concat(std::initializer_list<Tensor> parts, int axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape.size() != x.size()) {
    throw ShapeError("reshape: cannot view " + x.shape().str() + " as " + shape.str());
  }
  Tensor out = make(shape, "reshape", {x}, x.node().value);
  attach(out, [](Node& n) {
    auto& gx = n.inputs[0].node().grad_buffer();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += n.grad[i];
  });
  return out;
}

Tensor stop_gradient(const Tensor& x) {
  Tensor out = constant(x.shape(), x.node().value);
  out.node().op = "stop_gradient";
  return out;
}

Tensor linear_normalize(const Tensor& s, double guard, std::vector<bool>* guarded_rows) {
  const std::size_t r = s.rows(), k = s.cols();
  if (k == 0) throw ShapeError("linear_normalize on zero columns");
  Tensor out = make(s.shape(), "linear_normalize", {s});
  auto& y = out.node().value;
  const auto& sv = s.node().value;
  std::vector<double> denom(r, 0.0);
  std::vector<bool> guarded(r, false);
  for (std::size_t i = 0; i < r; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += sv[i * k + j];
    if (!(std::abs(total) >= guard)) {
      guarded[i] = true;
      for (std::size_t j = 0; j < k; ++j) y[i * k + j] = 1.0 / static_cast<double>(k);
    } else {
      denom[i] = total;
      for (std::size_t j = 0; j < k; ++j) y[i * k + j] = sv[i * k + j] / total;
    }
    double head = 0.0;
    for (std::size_t j = 0; j + 1 < k; ++j) head += y[i * k + j];
    y[i * k + k - 1] = 1.0 - head;
  }
  if (guarded_rows) *guarded_rows = guarded;
  attach(out, [r, k, denom = std::move(denom), guarded = std::move(guarded)](Node& n) {
    auto& gs = n.inputs[0].node().grad_buffer();
    for (std::size_t i = 0; i < r; ++i) {
      if (guarded[i]) continue;
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += n.grad[i * k + j] * n.value[i * k + j];
      for (std::size_t j = 0; j < k; ++j) gs[i * k + j] += (n.grad[i * k + j] - dot) / denom[i];
    }
  });
  return out;
}

// -- graph ------------------------------------------------------------------

void backward(const Tensor& root) {
  if (root.size() != 1) throw ShapeError("backward from non-scalar root " + root.shape().str());
  if (!root.requires_grad()) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{&root.node(), 0}};
  visited.insert(&root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = &node->inputs[next++].node();
      if (child->requires_grad && visited.insert(child).second) stack.push_back({child, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node().grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

double grad_check(const std::function<Tensor()>& f, Tensor& x, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-4)) throw ArgumentError("grad_check: eps must lie in [1e-7, 1e-4]");
  if (!x.requires_grad()) throw ArgumentError("grad_check: x does not require gradients");

  auto eval = [&f]() {
    const double v = f().item();
    if (!std::isfinite(v)) throw EvaluationError("grad_check: non-finite forward value");
    return v;
  };

  x.zero_grad();
  Tensor root = f();
  if (!std::isfinite(root.item())) throw EvaluationError("grad_check: non-finite forward value");
  backward(root);
  const std::vector<double> analytic = x.grad();
  root = Tensor();

  double worst = 0.0;
  auto values = x.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + eps;
    const double fp = eval();
    values[i] = saved - eps;
    const double fm = eval();
    values[i] = saved;
    const double numeric = (fp - fm) / (2.0 * eps);
    const double a = analytic[i];
    const double rel = std::abs(a - numeric) / std::max(1e-12, std::abs(a) + std::abs(numeric));
    worst = std::max(worst, rel);
  }
  return worst;
}

// -- parameters -------------------------------------------------------------

Tensor& ParamGroup::add(const std::string& name, Tensor t, bool trainable) {
  if (contains(name)) throw ArgumentError("duplicate parameter name '" + name + "' in group " + name_);
  t.node().requires_grad = trainable;
  t.node().op = "parameter";
  params_.push_back({name, std::move(t), trainable});
  return params_.back().tensor;
}

Tensor& ParamGroup::add_uniform(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::vector<double> v(shape.size());
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return add(name, constant(shape, std::move(v)), true);
}

Tensor& ParamGroup::add_constant(const std::string& name, Shape shape, double value,
                                 bool trainable) {
  return add(name, constant(shape, std::vector<double>(shape.size(), value)), trainable);
}

bool ParamGroup::contains(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Parameter& p) { return p.name == name; });
}

Tensor& ParamGroup::get(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return p.tensor;
  throw ArgumentError("no parameter '" + name + "' in group " + name_);
}

const Tensor& ParamGroup::get(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return p.tensor;
  throw ArgumentError("no parameter '" + name + "' in group " + name_);
}

void ParamGroup::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace pcssl::ad
