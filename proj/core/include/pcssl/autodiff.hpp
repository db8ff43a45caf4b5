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

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pcssl {
class Rng;
}

namespace pcssl::ad {

/// Row-major matrix shape. Scalars are 1x1, row vectors 1xn.
struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  std::string str() const;
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense row-major matrix of doubles, used for detached values.
struct Matrix {
  Shape shape;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : shape{rows, cols}, data(rows * cols, fill) {}
  Matrix(Shape s, std::vector<double> values);

  std::size_t rows() const { return shape.rows; }
  std::size_t cols() const { return shape.cols; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * shape.cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * shape.cols + c]; }
};

class Tensor;

/// Graph vertex. Holds the forward value, the gradient slot and the
/// closure that propagates the node's gradient into its inputs.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until the backward pass touches it
  std::vector<Tensor> inputs;
  std::function<void(Node&)> backward;
  bool requires_grad = false;
  const char* op = "leaf";

  std::vector<double>& grad_buffer();
};

/// Shared handle to a graph node. Copies alias the same node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rows() const { return node_->shape.rows; }
  std::size_t cols() const { return node_->shape.cols; }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<double> values() { return node_->value; }
  std::span<const double> values() const { return node_->value; }
  double value(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  /// Value of a 1x1 tensor.
  double item() const;

  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient buffer; zeros if backward never reached this node.
  std::vector<double> grad() const;
  std::span<double> grad_span() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad.clear(); }

  Matrix to_matrix() const { return Matrix(shape(), node_->value); }

  Node& node() const { return *node_; }
  const std::shared_ptr<Node>& ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// -- leaves -----------------------------------------------------------------

Tensor constant(Shape shape, std::vector<double> values);
Tensor constant(const Matrix& m);
Tensor scalar(double v);
/// Leaf that accumulates gradients.
Tensor variable(Shape shape, std::vector<double> values);

// -- primitives ---------------------------------------------------------------
//
// All primitives check shapes eagerly and throw ShapeError naming both
// operands. Broadcasting is limited to what the model needs: a 1xC row
// against an NxC matrix for add/sub/mul, and an Nx1 column for mul.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(const Tensor& a, double s);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// x W + b, with x: NxIn, W: InxOut, b: 1xOut.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
/// Subgradient 0 at 0.
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);
/// Natural log. Entries below `floor` (when floor > 0) are clamped to it,
/// contribute zero gradient and are counted in *clamped if non-null.
Tensor log(const Tensor& a, double floor = 0.0, std::size_t* clamped = nullptr);
/// Sum of all entries, 1x1.
Tensor sum(const Tensor& a);
/// axis 0: 1xC column sums; axis 1: Nx1 row sums.
Tensor sum(const Tensor& a, int axis);
Tensor mean(const Tensor& a);
/// Max-shifted softmax along axis 0 (columns) or 1 (rows).
Tensor softmax(const Tensor& a, int axis);
/// Unit Euclidean norm along the axis. Throws DegenerateEmbeddingError if a
/// slice has norm below min_norm and EvaluationError if it is not finite.
Tensor l2_normalize(const Tensor& a, int axis, double min_norm = 1e-12);

enum class BnMode { kTrain, kEval };

/// Per-column batch normalization. Train mode normalizes with the biased
/// batch statistics and folds them into the running estimates
/// (running = momentum * running + (1 - momentum) * batch, unbiased
/// variance). Eval mode normalizes with the running estimates.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                  Tensor& running_var, BnMode mode, double momentum = 0.9, double eps = 1e-8);

/// out[g] = max over rows x[groups[g*k .. g*k+k)], per column. The first
/// maximal row receives the gradient.
Tensor max_pool(const Tensor& x, std::span<const std::size_t> groups, std::size_t k);
/// out[i] = x[rows[i]]; backward scatter-adds.
Tensor gather(const Tensor& x, std::span<const std::size_t> rows);
/// out[i] = sum of rows [i*k, (i+1)*k).
Tensor segment_sum(const Tensor& x, std::size_t k);
Tensor concat(std::span<const Tensor> parts, int axis);
Tensor concat(std::initializer_list<Tensor> parts, int axis);
Tensor reshape(const Tensor& x, Shape shape);
/// Forwards the value, blocks gradient flow.
Tensor stop_gradient(const Tensor& x);

/// Row-wise linear normalization a_ij = s_ij / sum_j s_ij. Rows whose sum
/// has magnitude below `guard` fall back to the uniform 1/K (no gradient).
/// The last entry of each row is formed as 1 minus the sum of the others,
/// so a left-to-right sum of the row is exactly 1 whenever the partial sum
/// of the other entries lies in [-1, 2] (always true for weights in [0, 1]).
Tensor linear_normalize(const Tensor& s, double guard = 1e-8,
                        std::vector<bool>* guarded_rows = nullptr);

// -- graph ------------------------------------------------------------------

/// Reverse pass from a 1x1 root. Gradients accumulate into every node that
/// requires them, including persistent parameter leaves.
void backward(const Tensor& root);

/// Central-difference check of d f / d x. Returns
/// max_i |a_i - n_i| / max(1e-12, |a_i| + |n_i|). Throws EvaluationError if
/// a forward value is non-finite, ArgumentError if eps is outside
/// [1e-7, 1e-4].
double grad_check(const std::function<Tensor()>& f, Tensor& x, double eps = 1e-6);

// -- parameters -------------------------------------------------------------

struct Parameter {
  std::string name;
  Tensor tensor;
  bool trainable = true;
};

/// Named parameters with unique names, kept in insertion order.
class ParamGroup {
 public:
  ParamGroup() = default;
  explicit ParamGroup(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
  Tensor& add_uniform(const std::string& name, Shape shape, std::size_t fan_in, Rng& rng);
  Tensor& add_constant(const std::string& name, Shape shape, double value, bool trainable = true);

  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Parameter>& entries() { return params_; }
  const std::vector<Parameter>& entries() const { return params_; }

  void zero_grad();

 private:
  Tensor& add(const std::string& name, Tensor t, bool trainable);

  std::string name_;
  std::vector<Parameter> params_;
};

}  // namespace pcssl::ad
