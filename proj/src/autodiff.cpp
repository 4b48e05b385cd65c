#include "treevae/autodiff.hpp"

#include "treevae/parameters.hpp"

#include <cmath>

namespace treevae::diff {

namespace {

// A finite sum implies finite entries; only a non-finite sum needs the full scan.
void check_finite(const Matrix& m, const char* op, const char* what) {
  if (std::isfinite(m.sum())) return;
  if (!m.allFinite()) throw NonFiniteError(std::string("non-finite ") + what + " in op '" + op + "'");
}

void check_same_graph(Var a, Var b) {
  if (a.graph() != b.graph()) throw std::invalid_argument("vars belong to different graphs");
}

void check_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

}  // namespace

Graph::Graph(const ParameterStore* store, bool track_gradients) : store_(store), tracking_(track_gradients) {
  nodes_.reserve(4096);
}

Var Graph::push(Matrix value, const char* op, Backward backward) {
  check_finite(value, op, "value");
  Node node;
  node.value = std::move(value);
  node.op = op;
  if (tracking_) {
    node.needs_grad = static_cast<bool>(backward);
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::constant(Matrix value) { return push(std::move(value), "constant", nullptr); }

Var Graph::param(std::string_view name) {
  if (auto it = param_nodes_.find(name); it != param_nodes_.end()) return Var(this, it->second);
  if (store_ == nullptr) throw std::logic_error("graph has no parameter store");
  Var v = push(store_->value(name), "param", nullptr);
  nodes_.back().needs_grad = tracking_;
  param_nodes_.emplace(std::string(name), v.id());
  return v;
}

void Graph::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Graph::backward(Var loss) {
  if (!tracking_) throw std::logic_error("backward on a graph without gradient tracking");
  if (loss.graph() != this) throw std::invalid_argument("loss belongs to another graph");
  if (loss.rows() != 1 || loss.cols() != 1) throw std::invalid_argument("backward needs a scalar loss");
  accumulate(loss.id(), Matrix::Ones(1, 1));
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0 || !n.backward) continue;
    check_finite(n.grad, n.op, "gradient");
    n.backward(*this, id);
  }
}

Gradients Graph::gradients() const {
  Gradients out;
  if (store_ == nullptr) return out;
  for (const auto& [name, p] : store_->entries()) {
    auto it = param_nodes_.find(name);
    if (it != param_nodes_.end() && grad(it->second).size() != 0) {
      check_finite(grad(it->second), "param", "gradient");
      out.emplace(name, grad(it->second));
    } else {
      out.emplace(name, Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }
  return out;
}

Gradients Graph::reached_gradients() const {
  Gradients out;
  if (store_ == nullptr) return out;
  for (const auto& [name, id] : param_nodes_) {
    const auto& p = store_->value(name);
    if (grad(id).size() != 0) {
      check_finite(grad(id), "param", "gradient");
      out.emplace(name, grad(id));
    } else {
      out.emplace(name, Matrix::Zero(p.rows(), p.cols()));
    }
  }
  return out;
}

Var matmul(Var a, Var b) {
  check_same_graph(a, b);
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                                std::to_string(b.rows()));
  }
  Graph& g = *a.graph();
  const int ia = a.id(), ib = b.id();
  return g.push(a.value() * b.value(), "matmul", [ia, ib](Graph& g, int self) {
    const Matrix& go = g.grad(self);
    if (g.needs_grad(ia)) g.accumulate(ia, go * g.value(ib).transpose());
    if (g.needs_grad(ib)) g.accumulate(ib, g.value(ia).transpose() * go);
  });
}

Var add(Var a, Var b) {
  check_same_graph(a, b);
  check_same_shape(a, b, "add");
  const int ia = a.id(), ib = b.id();
  return a.graph()->push(a.value() + b.value(), "add", [ia, ib](Graph& g, int self) {
    g.accumulate(ia, g.grad(self));
    g.accumulate(ib, g.grad(self));
  });
}

Var sub(Var a, Var b) {
  check_same_graph(a, b);
  check_same_shape(a, b, "sub");
  const int ia = a.id(), ib = b.id();
  return a.graph()->push(a.value() - b.value(), "sub", [ia, ib](Graph& g, int self) {
    g.accumulate(ia, g.grad(self));
    g.accumulate(ib, -g.grad(self));
  });
}

Var mul(Var a, Var b) {
  check_same_graph(a, b);
  check_same_shape(a, b, "mul");
  const int ia = a.id(), ib = b.id();
  return a.graph()->push(a.value().cwiseProduct(b.value()), "mul", [ia, ib](Graph& g, int self) {
    if (g.needs_grad(ia)) g.accumulate(ia, g.grad(self).cwiseProduct(g.value(ib)));
    if (g.needs_grad(ib)) g.accumulate(ib, g.grad(self).cwiseProduct(g.value(ia)));
  });
}

Var scale(Var a, double c) {
  const int ia = a.id();
  return a.graph()->push(a.value() * c, "scale", [ia, c](Graph& g, int self) { g.accumulate(ia, g.grad(self) * c); });
}

Var add_scalar(Var a, double c) {
  const int ia = a.id();
  return a.graph()->push((a.value().array() + c).matrix(), "add_scalar",
                         [ia](Graph& g, int self) { g.accumulate(ia, g.grad(self)); });
}

Var one_minus(Var a) {
  const int ia = a.id();
  return a.graph()->push((1.0 - a.value().array()).matrix(), "one_minus",
                         [ia](Graph& g, int self) { g.accumulate(ia, -g.grad(self)); });
}

Var add_bias(Var a, Var bias) {
  check_same_graph(a, bias);
  if (bias.rows() != 1 || bias.cols() != a.cols()) throw std::invalid_argument("add_bias: bias must be 1 x cols");
  const int ia = a.id(), ib = bias.id();
  Matrix out = a.value();
  out.rowwise() += bias.value().row(0);
  return a.graph()->push(std::move(out), "add_bias", [ia, ib](Graph& g, int self) {
    g.accumulate(ia, g.grad(self));
    g.accumulate(ib, g.grad(self).colwise().sum());
  });
}

Var square(Var a) {
  const int ia = a.id();
  return a.graph()->push(a.value().array().square().matrix(), "square", [ia](Graph& g, int self) {
    g.accumulate(ia, (2.0 * g.grad(self).array() * g.value(ia).array()).matrix());
  });
}

Var log(Var a) {
  if ((a.value().array() <= 0.0).any()) throw NonFiniteError("log of a non-positive value");
  const int ia = a.id();
  return a.graph()->push(a.value().array().log().matrix(), "log", [ia](Graph& g, int self) {
    g.accumulate(ia, (g.grad(self).array() / g.value(ia).array()).matrix());
  });
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double celu_value(double x, double alpha) {
  return std::max(0.0, x) + std::min(0.0, alpha * std::expm1(x / alpha));
}

double celu_capped_value(double x, double alpha, double cap) { return std::min(celu_value(x, alpha), cap); }

Var sigmoid(Var a) {
  const int ia = a.id();
  Matrix out = a.value().unaryExpr([](double x) { return sigmoid_value(x); });
  return a.graph()->push(std::move(out), "sigmoid", [ia](Graph& g, int self) {
    const auto& y = g.value(self).array();
    g.accumulate(ia, (g.grad(self).array() * y * (1.0 - y)).matrix());
  });
}

Var celu(Var a, double alpha) {
  const int ia = a.id();
  Matrix out = a.value().unaryExpr([alpha](double x) { return celu_value(x, alpha); });
  return a.graph()->push(std::move(out), "celu", [ia, alpha](Graph& g, int self) {
    Matrix d = g.value(ia).unaryExpr([alpha](double x) { return x > 0 ? 1.0 : std::exp(x / alpha); });
    g.accumulate(ia, g.grad(self).cwiseProduct(d));
  });
}

Var celu_capped(Var a, double alpha, double cap) {
  const int ia = a.id();
  Matrix out = a.value().unaryExpr([alpha, cap](double x) { return celu_capped_value(x, alpha, cap); });
  return a.graph()->push(std::move(out), "celu_capped", [ia, alpha, cap](Graph& g, int self) {
    Matrix d = g.value(ia).unaryExpr([alpha, cap](double x) {
      if (x >= cap) return 0.0;
      return x > 0 ? 1.0 : std::exp(x / alpha);
    });
    g.accumulate(ia, g.grad(self).cwiseProduct(d));
  });
}

Var concat_cols(Var a, Var b) {
  check_same_graph(a, b);
  if (a.rows() != b.rows()) throw std::invalid_argument("concat_cols: row mismatch");
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  const int ia = a.id(), ib = b.id();
  const Eigen::Index ca = a.cols(), cb = b.cols();
  return a.graph()->push(std::move(out), "concat_cols", [ia, ib, ca, cb](Graph& g, int self) {
    g.accumulate(ia, g.grad(self).leftCols(ca));
    g.accumulate(ib, g.grad(self).rightCols(cb));
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no parts");
  Graph* graph = parts[0].graph();
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.graph() != graph) throw std::invalid_argument("vars belong to different graphs");
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> pieces;
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    pieces.emplace_back(p.id(), p.rows());
    r += p.rows();
  }
  return graph->push(std::move(out), "concat_rows", [pieces](Graph& g, int self) {
    Eigen::Index r = 0;
    for (const auto& [id, n] : pieces) {
      g.accumulate(id, g.grad(self).middleRows(r, n));
      r += n;
    }
  });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) throw std::out_of_range("slice_rows out of range");
  const int ia = a.id();
  const Eigen::Index rows = a.rows(), cols = a.cols();
  return a.graph()->push(a.value().middleRows(start, count), "slice_rows",
                         [ia, start, count, rows, cols](Graph& g, int self) {
                           Matrix full = Matrix::Zero(rows, cols);
                           full.middleRows(start, count) = g.grad(self);
                           g.accumulate(ia, full);
                         });
}

Var gather_rows(Var a, std::span<const int> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= a.rows()) throw std::out_of_range("gather_rows index out of range");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
  }
  const int ia = a.id();
  std::vector<int> idx(rows.begin(), rows.end());
  const Eigen::Index n = a.rows(), cols = a.cols();
  return a.graph()->push(std::move(out), "gather_rows", [ia, idx = std::move(idx), n, cols](Graph& g, int self) {
    Matrix full = Matrix::Zero(n, cols);
    const Matrix& go = g.grad(self);
    for (std::size_t i = 0; i < idx.size(); ++i) full.row(idx[i]) += go.row(static_cast<Eigen::Index>(i));
    g.accumulate(ia, full);
  });
}

Var select_rows(std::span<const char> take_a, Var a, Var b) {
  check_same_graph(a, b);
  check_same_shape(a, b, "select_rows");
  if (static_cast<Eigen::Index>(take_a.size()) != a.rows()) throw std::invalid_argument("select_rows: mask size");
  Matrix out = b.value();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    if (take_a[static_cast<std::size_t>(i)]) out.row(i) = a.value().row(i);
  }
  std::vector<char> mask(take_a.begin(), take_a.end());
  const int ia = a.id(), ib = b.id();
  return a.graph()->push(std::move(out), "select_rows", [mask = std::move(mask), ia, ib](Graph& g, int self) {
    Matrix ga = g.grad(self);
    Matrix gb = g.grad(self);
    for (Eigen::Index i = 0; i < ga.rows(); ++i) {
      if (mask[static_cast<std::size_t>(i)]) {
        gb.row(i).setZero();
      } else {
        ga.row(i).setZero();
      }
    }
    g.accumulate(ia, ga);
    g.accumulate(ib, gb);
  });
}

Var sum(Var a) {
  const int ia = a.id();
  const Eigen::Index r = a.rows(), c = a.cols();
  return a.graph()->push(Matrix::Constant(1, 1, a.value().sum()), "sum", [ia, r, c](Graph& g, int self) {
    g.accumulate(ia, Matrix::Constant(r, c, g.grad(self)(0, 0)));
  });
}

Var row_sum(Var a) {
  const int ia = a.id();
  const Eigen::Index c = a.cols();
  return a.graph()->push(a.value().rowwise().sum(), "row_sum", [ia, c](Graph& g, int self) {
    g.accumulate(ia, g.grad(self).replicate(1, c));
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var softmax_cross_entropy(Var logits, std::span<const int> targets, std::span<const double> weights,
                          std::vector<double>* row_nats) {
  const Eigen::Index n = logits.rows();
  if (static_cast<Eigen::Index>(targets.size()) != n || static_cast<Eigen::Index>(weights.size()) != n) {
    throw std::invalid_argument("softmax_cross_entropy: targets/weights size mismatch");
  }
  const Matrix& x = logits.value();
  Matrix probs(n, x.cols());
  double total = 0.0;
  if (row_nats != nullptr) row_nats->assign(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || t >= x.cols()) throw std::out_of_range("softmax_cross_entropy target out of range");
    const double m = x.row(i).maxCoeff();
    const RowVector e = (x.row(i).array() - m).exp().matrix();
    const double z = e.sum();
    probs.row(i) = e / z;
    const double nats = std::log(z) + m - x(i, t);
    if (row_nats != nullptr) (*row_nats)[static_cast<std::size_t>(i)] = nats;
    total += weights[static_cast<std::size_t>(i)] * nats;
  }
  const int il = logits.id();
  std::vector<int> tg(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  return logits.graph()->push(
      Matrix::Constant(1, 1, total), "softmax_cross_entropy",
      [il, probs = std::move(probs), tg = std::move(tg), w = std::move(w)](Graph& g, int self) {
        Matrix d = probs;
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
          d(i, tg[static_cast<std::size_t>(i)]) -= 1.0;
          d.row(i) *= w[static_cast<std::size_t>(i)];
        }
        g.accumulate(il, d * g.grad(self)(0, 0));
      });
}

}  // namespace treevae::diff
