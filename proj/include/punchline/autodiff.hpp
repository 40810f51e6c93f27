#pragma once

// Tape-based reverse-mode differentiation over row-major float matrices.
// A Graph lives for one forward/backward pass; Parameters outlive it and
// receive accumulated gradients when backward() runs.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace punchline::nn {

using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
  Matrix value;
  Matrix grad;
  bool trainable = true;

  Parameter() = default;
  explicit Parameter(Matrix v) : value(std::move(v)) {}
  void zero_grad() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
      grad = Matrix::Zero(value.rows(), value.cols());
    } else {
      grad.setZero();
    }
  }
};

struct Var {
  int id = -1;
};

class Graph {
 public:
  // With `enable_grad` false no backward closures are recorded.
  explicit Graph(bool enable_grad = true) : enable_grad_(enable_grad) {}

  Var constant(Matrix value);
  Var param(Parameter& p);

  const Matrix& value(Var v) const;
  float scalar(Var v) const { return value(v)(0, 0); }
  bool requires_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }

  // x[n,in] * W^T + b with W stored [out,in] and b [1,out].
  Var linear(Var x, Var weight, Var bias);
  // x[n,in] * W + b with W stored [in,out].
  Var affine(Var x, Var weight, Var bias);
  Var matmul(Var a, Var b);     // a * b
  Var matmul_bt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var add_row(Var a, Var row);  // broadcast [1,m] over rows
  Var mul(Var a, Var b);        // elementwise
  Var scale(Var a, float s);
  Var gelu(Var a);
  Var gelu_tanh(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);
  // Row-wise softmax; with `causal` each row r only sees columns <= r.
  Var softmax_rows(Var a, bool causal = false);
  Var layer_norm(Var x, Var gamma, Var beta, float eps);
  // Rows of `table` selected by ids.
  Var embedding(Var table, std::span<const int> ids);
  Var slice_cols(Var a, int start, int count);
  Var concat_cols(std::span<const Var> parts);
  Var row(Var a, int r);
  Var mean_rows(Var a);
  Var dropout(Var a, float rate, std::mt19937_64& rng);
  // Numerically stable binary cross-entropy on a 1x1 logit.
  Var bce_with_logits(Var logit, float target);

  // Seeds d(loss)/d(loss) = 1 and propagates into every Parameter reached.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix owned;
    const Matrix* ref = nullptr;
    Matrix grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::function<void(Graph&)> backward;

    const Matrix& value() const { return ref ? *ref : owned; }
  };

  Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
  const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }
  Var push(Matrix value, bool requires_grad);
  template <typename Expr>
  void accumulate(Var v, const Expr& g);
  const Matrix& grad_of(Var v) const { return node(v).grad; }

  bool enable_grad_;
  std::vector<Node> nodes_;
};

// Checksum over parameter bytes, used to assert frozen weights stay put.
std::uint64_t checksum(std::span<Parameter* const> params);

}  // namespace punchline::nn
