#include "punchline/autodiff.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "punchline/hashing.hpp"

namespace punchline::nn {

namespace {

constexpr float kInvSqrt2 = 0.70710678118654752f;
constexpr float kInvSqrt2Pi = 0.39894228040143268f;
constexpr float kSqrt2OverPi = 0.79788456080286536f;

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                "x" + std::to_string(b.cols()));
  }
}

}  // namespace

Var Graph::push(Matrix value, bool requires_grad) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad && enable_grad_;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename Expr>
void Graph::accumulate(Var v, const Expr& g) {
  Node& n = node(v);
  if (!n.requires_grad) return;
  if (n.param) {
    Parameter& p = *n.param;
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) p.zero_grad();
    p.grad += g;
    return;
  }
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

Var Graph::constant(Matrix value) { return push(std::move(value), false); }

Var Graph::param(Parameter& p) {
  Node n;
  n.ref = &p.value;
  n.param = &p;
  n.requires_grad = p.trainable && enable_grad_;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Graph::value(Var v) const { return node(v).value(); }

Var Graph::linear(Var x, Var w, Var b) {
  const Matrix& X = value(x);
  const Matrix& W = value(w);
  const Matrix& B = value(b);
  if (X.cols() != W.cols() || B.cols() != W.rows()) throw std::invalid_argument("linear: shape mismatch");
  Matrix y = X * W.transpose();
  y.rowwise() += B.row(0);
  const bool rg = requires_grad(x) || requires_grad(w) || requires_grad(b);
  const Var out = push(std::move(y), rg);
  if (node(out).requires_grad) {
    node(out).backward = [x, w, b, out](Graph& g) {
      const Matrix& dy = g.grad_of(out);
      if (g.requires_grad(x)) g.accumulate(x, dy * g.value(w));
      if (g.requires_grad(w)) g.accumulate(w, dy.transpose() * g.value(x));
      if (g.requires_grad(b)) g.accumulate(b, dy.colwise().sum());
    };
  }
  return out;
}

Var Graph::affine(Var x, Var w, Var b) {
  const Matrix& X = value(x);
  const Matrix& W = value(w);
  const Matrix& B = value(b);
  if (X.cols() != W.rows() || B.cols() != W.cols()) throw std::invalid_argument("affine: shape mismatch");
  Matrix y = X * W;
  y.rowwise() += B.row(0);
  const bool rg = requires_grad(x) || requires_grad(w) || requires_grad(b);
  const Var out = push(std::move(y), rg);
  if (node(out).requires_grad) {
    node(out).backward = [x, w, b, out](Graph& g) {
      const Matrix& dy = g.grad_of(out);
      if (g.requires_grad(x)) g.accumulate(x, dy * g.value(w).transpose());
      if (g.requires_grad(w)) g.accumulate(w, g.value(x).transpose() * dy);
      if (g.requires_grad(b)) g.accumulate(b, dy.colwise().sum());
    };
  }
  return out;
}

Var Graph::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) throw std::invalid_argument("matmul: shape mismatch");
  Matrix y = value(a) * value(b);
  const Var out = push(std::move(y), requires_grad(a) || requires_grad(b));
  if (node(out).requires_grad) {
    node(out).backward = [a, b, out](Graph& g) {
      const Matrix& dy = g.grad_of(out);
      if (g.requires_grad(a)) g.accumulate(a, dy * g.value(b).transpose());
      if (g.requires_grad(b)) g.accumulate(b, g.value(a).transpose() * dy);
    };
  }
  return out;
}

Var Graph::matmul_bt(Var a, Var b) {
  if (value(a).cols() != value(b).cols()) throw std::invalid_argument("matmul_bt: shape mismatch");
  Matrix y = value(a) * value(b).transpose();
  const Var out = push(std::move(y), requires_grad(a) || requires_grad(b));
  if (node(out).requires_grad) {
    node(out).backward = [a, b, out](Graph& g) {
      const Matrix& dy = g.grad_of(out);
      if (g.requires_grad(a)) g.accumulate(a, dy * g.value(b));
      if (g.requires_grad(b)) g.accumulate(b, dy.transpose() * g.value(a));
    };
  }
  return out;
}

Var Graph::add(Var a, Var b) {
  check_same_shape(value(a), value(b), "add");
  Matrix y = value(a) + value(b);
  const Var out = push(std::move(y), requires_grad(a) || requires_grad(b));
  if (node(out).requires_grad) {
    node(out).backward = [a, b, out](Graph& g) {
      const Matrix& dy = g.grad_of(out);
      g.accumulate(a, dy);
      g.accumulate(b, dy);
    };
  }
  return out;
}

Var Graph::add_row(Var a, Var r) {
  if (value(r).rows() != 1 || value(r).cols() != value(a).cols()) {
    throw std::invalid_argument("add_row: shape mismatch");
  }
  Matrix y = value(a);
  y.rowwise() += value(r).row(0);
  const Var out = push(std::move(y), requires_grad(a) || requires_grad(r));
  if (node(out).requires_grad) {
    node(out).backward = [a, r, out](Graph& g) {
      const Matrix& dy = g.grad_of(out);
      g.accumulate(a, dy);
      if (g.requires_grad(r)) g.accumulate(r, dy.colwise().sum());
    };
  }
  return out;
}

Var Graph::mul(Var a, Var b) {
  check_same_shape(value(a), value(b), "mul");
  Matrix y = value(a).cwiseProduct(value(b));
  const Var out = push(std::move(y), requires_grad(a) || requires_grad(b));
  if (node(out).requires_grad) {
    node(out).backward = [a, b, out](Graph& g) {
      const Matrix& dy = g.grad_of(out);
      if (g.requires_grad(a)) g.accumulate(a, dy.cwiseProduct(g.value(b)));
      if (g.requires_grad(b)) g.accumulate(b, dy.cwiseProduct(g.value(a)));
    };
  }
  return out;
}

Var Graph::scale(Var a, float s) {
  Matrix y = value(a) * s;
  const Var out = push(std::move(y), requires_grad(a));
  if (node(out).requires_grad) {
    node(out).backward = [a, s, out](Graph& g) { g.accumulate(a, g.grad_of(out) * s); };
  }
  return out;
}

Var Graph::gelu(Var a) {
  const Matrix& x = value(a);
  Matrix y = x.unaryExpr([](float v) { return 0.5f * v * (1.0f + std::erf(v * kInvSqrt2)); });
  const Var out = push(std::move(y), requires_grad(a));
  if (node(out).requires_grad) {
    node(out).backward = [a, out](Graph& g) {
      const Matrix d = g.value(a).unaryExpr([](float v) {
        return 0.5f * (1.0f + std::erf(v * kInvSqrt2)) + v * kInvSqrt2Pi * std::exp(-0.5f * v * v);
      });
      g.accumulate(a, g.grad_of(out).cwiseProduct(d));
    };
  }
  return out;
}

Var Graph::gelu_tanh(Var a) {
  const Matrix& x = value(a);
  Matrix y = x.unaryExpr([](float v) {
    return 0.5f * v * (1.0f + std::tanh(kSqrt2OverPi * (v + 0.044715f * v * v * v)));
  });
  const Var out = push(std::move(y), requires_grad(a));
  if (node(out).requires_grad) {
    node(out).backward = [a, out](Graph& g) {
      const Matrix d = g.value(a).unaryExpr([](float v) {
        const float t = std::tanh(kSqrt2OverPi * (v + 0.044715f * v * v * v));
        return 0.5f * (1.0f + t) +
               0.5f * v * (1.0f - t * t) * kSqrt2OverPi * (1.0f + 3.0f * 0.044715f * v * v);
      });
      g.accumulate(a, g.grad_of(out).cwiseProduct(d));
    };
  }
  return out;
}

Var Graph::tanh(Var a) {
  Matrix y = value(a).array().tanh().matrix();
  const Var out = push(std::move(y), requires_grad(a));
  if (node(out).requires_grad) {
    node(out).backward = [a, out](Graph& g) {
      const Matrix& y = g.value(out);
      g.accumulate(a, g.grad_of(out).cwiseProduct((1.0f - y.array().square()).matrix()));
    };
  }
  return out;
}

Var Graph::sigmoid(Var a) {
  Matrix y = value(a).unaryExpr([](float v) {
    return v >= 0 ? 1.0f / (1.0f + std::exp(-v)) : std::exp(v) / (1.0f + std::exp(v));
  });
  const Var out = push(std::move(y), requires_grad(a));
  if (node(out).requires_grad) {
    node(out).backward = [a, out](Graph& g) {
      const Matrix& y = g.value(out);
      g.accumulate(a, g.grad_of(out).cwiseProduct((y.array() * (1.0f - y.array())).matrix()));
    };
  }
  return out;
}

Var Graph::softmax_rows(Var a, bool causal) {
  const Matrix& x = value(a);
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Eigen::Index visible = causal ? std::min<Eigen::Index>(r + 1, x.cols()) : x.cols();
    const float mx = x.row(r).head(visible).maxCoeff();
    float total = 0.0f;
    for (Eigen::Index c = 0; c < visible; ++c) {
      const float e = std::exp(x(r, c) - mx);
      y(r, c) = e;
      total += e;
    }
    for (Eigen::Index c = 0; c < visible; ++c) y(r, c) /= total;
    for (Eigen::Index c = visible; c < x.cols(); ++c) y(r, c) = 0.0f;
  }
  const Var out = push(std::move(y), requires_grad(a));
  if (node(out).requires_grad) {
    node(out).backward = [a, out](Graph& g) {
      const Matrix& y = g.value(out);
      const Matrix& dy = g.grad_of(out);
      const Eigen::VectorXf dot = dy.cwiseProduct(y).rowwise().sum();
      Matrix dx = y.cwiseProduct(dy - dot.replicate(1, y.cols()));
      g.accumulate(a, dx);
    };
  }
  return out;
}

Var Graph::layer_norm(Var x, Var gamma, Var beta, float eps) {
  const Matrix& X = value(x);
  const Eigen::Index d = X.cols();
  if (value(gamma).cols() != d || value(beta).cols() != d) {
    throw std::invalid_argument("layer_norm: shape mismatch");
  }
  Matrix xhat(X.rows(), d);
  Eigen::VectorXf inv_std(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const float mean = X.row(r).mean();
    const float var = (X.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0f / std::sqrt(var + eps);
    xhat.row(r) = (X.row(r).array() - mean) * inv_std(r);
  }
  Matrix y = xhat;
  y.array().rowwise() *= value(gamma).row(0).array();
  y.rowwise() += value(beta).row(0);
  const bool rg = requires_grad(x) || requires_grad(gamma) || requires_grad(beta);
  const Var out = push(std::move(y), rg);
  if (node(out).requires_grad) {
    node(out).backward = [x, gamma, beta, out, xhat = std::move(xhat),
                          inv_std = std::move(inv_std)](Graph& g) {
      const Matrix& dy = g.grad_of(out);
      if (g.requires_grad(gamma)) g.accumulate(gamma, dy.cwiseProduct(xhat).colwise().sum());
      if (g.requires_grad(beta)) g.accumulate(beta, dy.colwise().sum());
      if (g.requires_grad(x)) {
        Matrix dxhat = dy;
        dxhat.array().rowwise() *= g.value(gamma).row(0).array();
        const auto n = static_cast<float>(dxhat.cols());
        Matrix dx(dxhat.rows(), dxhat.cols());
        for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
          const float s1 = dxhat.row(r).sum();
          const float s2 = dxhat.row(r).dot(xhat.row(r));
          dx.row(r) = (inv_std(r) / n) *
                      (n * dxhat.row(r).array() - s1 - xhat.row(r).array() * s2).matrix();
        }
        g.accumulate(x, dx);
      }
    };
  }
  return out;
}

Var Graph::embedding(Var table, std::span<const int> ids) {
  const Matrix& T = value(table);
  Matrix y(static_cast<Eigen::Index>(ids.size()), T.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= T.rows()) throw std::out_of_range("embedding: id out of range");
    y.row(static_cast<Eigen::Index>(i)) = T.row(ids[i]);
  }
  const Var out = push(std::move(y), requires_grad(table));
  if (node(out).requires_grad) {
    std::vector<int> rows(ids.begin(), ids.end());
    node(out).backward = [table, out, rows = std::move(rows)](Graph& g) {
      const Matrix& dy = g.grad_of(out);
      Node& t = g.node(table);
      Matrix* target = nullptr;
      if (t.param) {
        if (t.param->grad.rows() != t.param->value.rows() ||
            t.param->grad.cols() != t.param->value.cols()) {
          t.param->zero_grad();
        }
        target = &t.param->grad;
      } else {
        if (t.grad.size() == 0) t.grad = Matrix::Zero(t.value().rows(), t.value().cols());
        target = &t.grad;
      }
      for (std::size_t i = 0; i < rows.size(); ++i) {
        target->row(rows[i]) += dy.row(static_cast<Eigen::Index>(i));
      }
    };
  }
  return out;
}

Var Graph::slice_cols(Var a, int start, int count) {
  const Matrix& x = value(a);
  if (start < 0 || count < 0 || start + count > x.cols()) throw std::out_of_range("slice_cols");
  Matrix y = x.middleCols(start, count);
  const Var out = push(std::move(y), requires_grad(a));
  if (node(out).requires_grad) {
    node(out).backward = [a, start, count, out](Graph& g) {
      Matrix d = Matrix::Zero(g.value(a).rows(), g.value(a).cols());
      d.middleCols(start, count) = g.grad_of(out);
      g.accumulate(a, d);
    };
  }
  return out;
}

Var Graph::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (const Var p : parts) {
    if (value(p).rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += value(p).cols();
    rg = rg || requires_grad(p);
  }
  Matrix y(rows, cols);
  Eigen::Index at = 0;
  for (const Var p : parts) {
    y.middleCols(at, value(p).cols()) = value(p);
    at += value(p).cols();
  }
  const Var out = push(std::move(y), rg);
  if (node(out).requires_grad) {
    std::vector<Var> inputs(parts.begin(), parts.end());
    node(out).backward = [inputs = std::move(inputs), out](Graph& g) {
      const Matrix& dy = g.grad_of(out);
      Eigen::Index at = 0;
      for (const Var p : inputs) {
        const Eigen::Index c = g.value(p).cols();
        if (g.requires_grad(p)) g.accumulate(p, dy.middleCols(at, c));
        at += c;
      }
    };
  }
  return out;
}

Var Graph::row(Var a, int r) {
  if (r < 0 || r >= value(a).rows()) throw std::out_of_range("row");
  Matrix y = value(a).row(r);
  const Var out = push(std::move(y), requires_grad(a));
  if (node(out).requires_grad) {
    node(out).backward = [a, r, out](Graph& g) {
      Matrix d = Matrix::Zero(g.value(a).rows(), g.value(a).cols());
      d.row(r) = g.grad_of(out).row(0);
      g.accumulate(a, d);
    };
  }
  return out;
}

Var Graph::mean_rows(Var a) {
  const Matrix& x = value(a);
  Matrix y = x.colwise().mean();
  const Var out = push(std::move(y), requires_grad(a));
  if (node(out).requires_grad) {
    node(out).backward = [a, out](Graph& g) {
      const auto n = g.value(a).rows();
      Matrix d = g.grad_of(out).replicate(n, 1) / static_cast<float>(n);
      g.accumulate(a, d);
    };
  }
  return out;
}

Var Graph::dropout(Var a, float rate, std::mt19937_64& rng) {
  if (rate <= 0.0f) return a;
  std::bernoulli_distribution keep(1.0 - rate);
  const float s = 1.0f / (1.0f - rate);
  Matrix mask(value(a).rows(), value(a).cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? s : 0.0f;
  Matrix y = value(a).cwiseProduct(mask);
  const Var out = push(std::move(y), requires_grad(a));
  if (node(out).requires_grad) {
    node(out).backward = [a, out, mask = std::move(mask)](Graph& g) {
      g.accumulate(a, g.grad_of(out).cwiseProduct(mask));
    };
  }
  return out;
}

Var Graph::bce_with_logits(Var logit, float target) {
  const Matrix& z = value(logit);
  if (z.rows() != 1 || z.cols() != 1) throw std::invalid_argument("bce_with_logits: expects 1x1");
  const float v = z(0, 0);
  Matrix loss(1, 1);
  loss(0, 0) = std::max(v, 0.0f) - v * target + std::log1p(std::exp(-std::abs(v)));
  const Var out = push(std::move(loss), requires_grad(logit));
  if (node(out).requires_grad) {
    node(out).backward = [logit, target, out](Graph& g) {
      const float v = g.value(logit)(0, 0);
      const float p = v >= 0 ? 1.0f / (1.0f + std::exp(-v)) : std::exp(v) / (1.0f + std::exp(v));
      Matrix d(1, 1);
      d(0, 0) = (p - target) * g.grad_of(out)(0, 0);
      g.accumulate(logit, d);
    };
  }
  return out;
}

void Graph::backward(Var loss) {
  if (!enable_grad_) throw std::logic_error("backward on a graph built without gradients");
  Node& l = node(loss);
  if (l.value().size() != 1) throw std::invalid_argument("backward: loss must be a scalar");
  if (!l.requires_grad) return;
  l.grad = Matrix::Ones(1, 1);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backward && n.grad.size() != 0) n.backward(*this);
  }
}

std::uint64_t checksum(std::span<Parameter* const> params) {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (const Parameter* p : params) {
    const auto* bytes = reinterpret_cast<const char*>(p->value.data());
    h = splitmix64(h ^ fnv1a64(std::string_view(bytes, static_cast<std::size_t>(p->value.size()) * sizeof(float))));
  }
  return h;
}

}  // namespace punchline::nn
