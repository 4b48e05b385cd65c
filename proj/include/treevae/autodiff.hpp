#pragma once

// Reverse-mode differentiation over dense matrices. A Graph records every op
// applied to its Vars; backward() walks the record in reverse. Rows are batch
// items and columns are features throughout the project.

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace treevae::diff {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Gradients = std::map<std::string, Matrix, std::less<>>;

class ParameterStore;
class Graph;

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Var {
 public:
  Var() = default;
  Var(Graph* g, int id) : graph_(g), id_(id) {}

  bool valid() const { return graph_ != nullptr; }
  Graph* graph() const { return graph_; }
  int id() const { return id_; }
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }

 private:
  Graph* graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  using Backward = std::function<void(Graph&, int self)>;

  // With track_gradients=false ops only compute values (evaluation and
  // generation), sharing the exact forward code path with training.
  explicit Graph(const ParameterStore* store = nullptr, bool track_gradients = true);

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Matrix value);
  Var param(std::string_view name);

  bool tracking() const { return tracking_; }
  const ParameterStore* store() const { return store_; }

  // loss must be 1x1. Gradients accumulate if called more than once.
  void backward(Var loss);

  // One entry per parameter in the store; parameters the graph never
  // reached receive zeros.
  Gradients gradients() const;
  // Only the parameters the graph read; the optimizer leaves the rest, and
  // their moments, untouched.
  Gradients reached_gradients() const;

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Matrix& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  void accumulate(int id, const Matrix& g);
  // Constants never receive gradients.
  bool needs_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  Var push(Matrix value, const char* op, Backward backward);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    const char* op = "";
    bool needs_grad = false;
    Backward backward;
  };

  const ParameterStore* store_;
  bool tracking_;
  std::vector<Node> nodes_;
  std::map<std::string, int, std::less<>> param_nodes_;
};

inline const Matrix& Var::value() const { return graph_->value(id_); }

// Linear algebra and elementwise arithmetic.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var one_minus(Var a);
Var add_bias(Var a, Var bias);  // bias is 1 x cols, broadcast over rows
Var square(Var a);
Var log(Var a);

// Nonlinearities.
Var sigmoid(Var a);
Var celu(Var a, double alpha = 3.0);
// min(CELU(x, alpha), cap); the gradient is zero at and past the cap.
Var celu_capped(Var a, double alpha = 3.0, double cap = 6.0);

// Structure.
Var concat_cols(Var a, Var b);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var gather_rows(Var a, std::span<const int> rows);
// Row i of the result is a_i when take_a[i] is 1, otherwise b_i.
Var select_rows(std::span<const char> take_a, Var a, Var b);

// Reductions.
Var sum(Var a);
Var row_sum(Var a);  // rows x 1
Var mean(Var a);

// sum_i weights[i] * (-log softmax(logits_i)[targets[i]]). When row_nats is
// non-null it receives the unweighted per-row cross-entropy.
Var softmax_cross_entropy(Var logits, std::span<const int> targets, std::span<const double> weights,
                          std::vector<double>* row_nats = nullptr);

// Scalar helpers shared with the tests.
double celu_value(double x, double alpha = 3.0);
double celu_capped_value(double x, double alpha = 3.0, double cap = 6.0);
double sigmoid_value(double x);

}  // namespace treevae::diff
