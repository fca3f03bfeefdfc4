#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace concode::tensor {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Node;

// A 2-D value in an autodiff graph. Copies share the underlying node.
// Vectors are n x 1 columns.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Matrix value, bool requires_grad = false);
  static Tensor zeros(Eigen::Index rows, Eigen::Index cols = 1, bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const;
  Matrix& mutable_value();
  // Zero-filled when nothing has flowed back yet.
  const Matrix& grad() const;
  Matrix& mutable_grad();
  void zero_grad();
  bool requires_grad() const;

  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double item() const;
  std::string shape_string() const;

  std::shared_ptr<Node> node() const { return node_; }

 private:
  friend Tensor make_result(Matrix value, std::vector<Tensor> inputs, std::function<void(Node&)> backward);
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into its inputs' grads.
  std::function<void(Node&)> backward;

  Node() = default;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;
  // Releases long input chains without recursion.
  ~Node();

  Matrix& ensure_grad();
};

// While alive, ops on this thread record no graph.
class NoGrad {
 public:
  NoGrad();
  ~NoGrad();
  NoGrad(const NoGrad&) = delete;
  NoGrad& operator=(const NoGrad&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Builds a graph node; the backward closure is dropped when no input
// requires grad or recording is disabled.
Tensor make_result(Matrix value, std::vector<Tensor> inputs, std::function<void(Node&)> backward);

// Forward ops. Shape mismatches throw ShapeError naming both shapes.
Tensor matmul(const Tensor& a, const Tensor& b);
// aᵀ b without materializing the transpose.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
// alpha * a + beta, elementwise.
Tensor affine(const Tensor& a, double alpha, double beta);
Tensor scale_by(const Tensor& a, const Tensor& s);  // a * s for a 1x1 tensor s
// Stacks vertically (rows); all parts must share a column count.
Tensor concat(std::span<const Tensor> parts);
Tensor concat(std::initializer_list<Tensor> parts);
// Places column vectors side by side.
Tensor hconcat(std::span<const Tensor> columns);
Tensor slice_rows(const Tensor& a, Eigen::Index begin, Eigen::Index count);
Tensor element(const Tensor& a, Eigen::Index row, Eigen::Index col = 0);
Tensor sum(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
// Normalizes each column.
Tensor softmax(const Tensor& a);
Tensor log(const Tensor& a);
// Column `index` of a (dim x vocab) table.
Tensor embedding_lookup(const Tensor& table, Eigen::Index index);
Tensor gather_rows(const Tensor& a, std::span<const int> rows);
// Inverted dropout: zeroes with probability p and scales survivors by
// 1/(1-p) when `train`; identity otherwise.
Tensor dropout(const Tensor& a, double p, bool train, std::mt19937_64& rng);
// One LSTM step. w is 4n x (in + n) with gate blocks [input; forget; output;
// candidate], b is 4n x 1. Returns [h'; c'] (2n x 1).
Tensor lstm_cell(const Tensor& x, const Tensor& h, const Tensor& c, const Tensor& w, const Tensor& b);

// Reverse-mode sweep from a 1x1 loss. Gradients accumulate into every node
// that requires grad; each node's backward runs once.
void backward(const Tensor& loss);

}  // namespace concode::tensor
