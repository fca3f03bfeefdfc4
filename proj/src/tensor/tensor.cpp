#include "concode/tensor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace concode::tensor {

namespace {

thread_local bool g_grad_enabled = true;

std::string shape_of(const Matrix& m) {
  return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " + b.shape_string());
}

void accumulate(const std::shared_ptr<Node>& n, const Matrix& g) {
  if (n->requires_grad) n->ensure_grad() += g;
}

template <typename Expr>
void accumulate(const std::shared_ptr<Node>& n, const Expr& g) {
  if (n->requires_grad) n->ensure_grad() += g;
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Node::~Node() {
  std::vector<std::shared_ptr<Node>> pending = std::move(inputs);
  while (!pending.empty()) {
    std::shared_ptr<Node> n = std::move(pending.back());
    pending.pop_back();
    if (n && n.use_count() == 1) {
      for (auto& in : n->inputs) pending.push_back(std::move(in));
      n->inputs.clear();
    }
  }
}

Matrix& Node::ensure_grad() {
  if (grad.size() == 0) grad = Matrix::Zero(value.rows(), value.cols());
  return grad;
}

NoGrad::NoGrad() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGrad::~NoGrad() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor::Tensor(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Eigen::Index rows, Eigen::Index cols, bool requires_grad) {
  return Tensor(Matrix::Zero(rows, cols), requires_grad);
}

Tensor Tensor::scalar(double v) { return Tensor(Matrix::Constant(1, 1, v)); }

const Matrix& Tensor::value() const {
  if (!node_) throw std::logic_error("use of an undefined tensor");
  return node_->value;
}

Matrix& Tensor::mutable_value() {
  if (!node_) throw std::logic_error("use of an undefined tensor");
  return node_->value;
}

const Matrix& Tensor::grad() const { return node_->ensure_grad(); }
Matrix& Tensor::mutable_grad() { return node_->ensure_grad(); }
void Tensor::zero_grad() {
  if (node_->grad.size() != 0) node_->grad.setZero();
}
bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

double Tensor::item() const {
  if (value().size() != 1) throw ShapeError("item() on non-scalar " + shape_string());
  return value()(0, 0);
}

std::string Tensor::shape_string() const { return node_ ? shape_of(node_->value) : "[undefined]"; }

Tensor make_result(Matrix value, std::vector<Tensor> inputs, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    const bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
    if (any) {
      node->requires_grad = true;
      node->backward = std::move(backward);
      node->inputs.reserve(inputs.size());
      for (auto& t : inputs) node->inputs.push_back(t.node());
    }
  }
  return Tensor(std::move(node));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  return make_result(a.value() * b.value(), {a, b}, [](Node& n) {
    const auto& A = n.inputs[0];
    const auto& B = n.inputs[1];
    if (A->requires_grad) A->ensure_grad().noalias() += n.grad * B->value.transpose();
    if (B->requires_grad) B->ensure_grad().noalias() += A->value.transpose() * n.grad;
  });
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) shape_error("matmul_tn", a, b);
  return make_result(a.value().transpose() * b.value(), {a, b}, [](Node& n) {
    const auto& A = n.inputs[0];
    const auto& B = n.inputs[1];
    if (A->requires_grad) A->ensure_grad().noalias() += B->value * n.grad.transpose();
    if (B->requires_grad) B->ensure_grad().noalias() += A->value * n.grad;
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("add", a, b);
  return make_result(a.value() + b.value(), {a, b}, [](Node& n) {
    accumulate(n.inputs[0], n.grad);
    accumulate(n.inputs[1], n.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("sub", a, b);
  return make_result(a.value() - b.value(), {a, b}, [](Node& n) {
    accumulate(n.inputs[0], n.grad);
    accumulate(n.inputs[1], -n.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("mul", a, b);
  return make_result(a.value().cwiseProduct(b.value()), {a, b}, [](Node& n) {
    const auto& A = n.inputs[0];
    const auto& B = n.inputs[1];
    if (A->requires_grad) A->ensure_grad() += n.grad.cwiseProduct(B->value);
    if (B->requires_grad) B->ensure_grad() += n.grad.cwiseProduct(A->value);
  });
}

Tensor affine(const Tensor& a, double alpha, double beta) {
  Matrix v = (alpha * a.value()).array() + beta;
  return make_result(std::move(v), {a}, [alpha](Node& n) { accumulate(n.inputs[0], alpha * n.grad); });
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
  if (s.value().size() != 1) shape_error("scale_by", a, s);
  return make_result(a.value() * s.item(), {a, s}, [](Node& n) {
    const auto& A = n.inputs[0];
    const auto& S = n.inputs[1];
    if (A->requires_grad) A->ensure_grad() += n.grad * S->value(0, 0);
    if (S->requires_grad) S->ensure_grad()(0, 0) += n.grad.cwiseProduct(A->value).sum();
  });
}

Tensor concat(std::initializer_list<Tensor> parts) { return concat(std::span<const Tensor>(parts.begin(), parts.size())); }

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts[0].cols();
  for (const auto& p : parts) {
    if (p.cols() != cols) shape_error("concat", parts[0], p);
    rows += p.rows();
  }
  Matrix v(rows, cols);
  std::vector<Eigen::Index> offsets;
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    offsets.push_back(r);
    v.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return make_result(std::move(v), {parts.begin(), parts.end()}, [offsets](Node& n) {
    for (std::size_t i = 0; i < n.inputs.size(); ++i) {
      const auto& in = n.inputs[i];
      if (in->requires_grad) in->ensure_grad() += n.grad.middleRows(offsets[i], in->value.rows());
    }
  });
}

Tensor hconcat(std::span<const Tensor> columns) {
  if (columns.empty()) throw ShapeError("hconcat of zero tensors");
  const Eigen::Index rows = columns[0].rows();
  Matrix v(rows, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].rows() != rows || columns[j].cols() != 1) shape_error("hconcat", columns[0], columns[j]);
    v.col(static_cast<Eigen::Index>(j)) = columns[j].value();
  }
  return make_result(std::move(v), {columns.begin(), columns.end()}, [](Node& n) {
    for (std::size_t j = 0; j < n.inputs.size(); ++j) {
      accumulate(n.inputs[j], n.grad.col(static_cast<Eigen::Index>(j)));
    }
  });
}

Tensor slice_rows(const Tensor& a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + a.shape_string());
  }
  return make_result(a.value().middleRows(begin, count), {a}, [begin, count](Node& n) {
    if (n.inputs[0]->requires_grad) n.inputs[0]->ensure_grad().middleRows(begin, count) += n.grad;
  });
}

Tensor element(const Tensor& a, Eigen::Index row, Eigen::Index col) {
  if (row < 0 || row >= a.rows() || col < 0 || col >= a.cols()) {
    throw ShapeError("element (" + std::to_string(row) + ", " + std::to_string(col) + ") out of range for " +
                     a.shape_string());
  }
  return make_result(Matrix::Constant(1, 1, a.value()(row, col)), {a}, [row, col](Node& n) {
    if (n.inputs[0]->requires_grad) n.inputs[0]->ensure_grad()(row, col) += n.grad(0, 0);
  });
}

Tensor sum(const Tensor& a) {
  return make_result(Matrix::Constant(1, 1, a.value().sum()), {a}, [](Node& n) {
    if (n.inputs[0]->requires_grad) n.inputs[0]->ensure_grad().array() += n.grad(0, 0);
  });
}

Tensor tanh(const Tensor& a) {
  Matrix v = a.value().array().tanh();
  return make_result(std::move(v), {a}, [](Node& n) {
    if (n.inputs[0]->requires_grad) {
      n.inputs[0]->ensure_grad().array() += n.grad.array() * (1.0 - n.value.array().square());
    }
  });
}

Tensor sigmoid(const Tensor& a) {
  Matrix v = a.value().unaryExpr([](double x) { return stable_sigmoid(x); });
  return make_result(std::move(v), {a}, [](Node& n) {
    if (n.inputs[0]->requires_grad) {
      n.inputs[0]->ensure_grad().array() += n.grad.array() * n.value.array() * (1.0 - n.value.array());
    }
  });
}

Tensor softmax(const Tensor& a) {
  Matrix v(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const auto col = a.value().col(j);
    const double m = col.maxCoeff();
    v.col(j) = (col.array() - m).exp();
    v.col(j) /= v.col(j).sum();
  }
  return make_result(std::move(v), {a}, [](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    auto& g = n.inputs[0]->ensure_grad();
    for (Eigen::Index j = 0; j < n.value.cols(); ++j) {
      const double dot = n.grad.col(j).dot(n.value.col(j));
      g.col(j).array() += n.value.col(j).array() * (n.grad.col(j).array() - dot);
    }
  });
}

Tensor log(const Tensor& a) {
  Matrix v = a.value().array().log();
  return make_result(std::move(v), {a}, [](Node& n) {
    if (n.inputs[0]->requires_grad) n.inputs[0]->ensure_grad().array() += n.grad.array() / n.inputs[0]->value.array();
  });
}

Tensor embedding_lookup(const Tensor& table, Eigen::Index index) {
  if (index < 0 || index >= table.cols()) {
    throw ShapeError("embedding_lookup: index " + std::to_string(index) + " out of bounds for table " +
                     table.shape_string());
  }
  return make_result(table.value().col(index), {table}, [index](Node& n) {
    if (n.inputs[0]->requires_grad) n.inputs[0]->ensure_grad().col(index) += n.grad;
  });
}

Tensor gather_rows(const Tensor& a, std::span<const int> rows) {
  Matrix v(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= a.rows()) {
      throw ShapeError("gather_rows: row " + std::to_string(rows[i]) + " out of bounds for " + a.shape_string());
    }
    v.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return make_result(std::move(v), {a}, [idx = std::move(idx)](Node& n) {
    if (!n.inputs[0]->requires_grad) return;
    auto& g = n.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i) g.row(idx[i]) += n.grad.row(static_cast<Eigen::Index>(i));
  });
}

Tensor dropout(const Tensor& a, double p, bool train, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout probability must be in [0, 1)");
  if (!train || p == 0.0) return a;
  std::bernoulli_distribution keep(1.0 - p);
  Matrix mask(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? 1.0 / (1.0 - p) : 0.0;
  Matrix v = a.value().cwiseProduct(mask);
  return make_result(std::move(v), {a}, [mask = std::move(mask)](Node& n) {
    if (n.inputs[0]->requires_grad) n.inputs[0]->ensure_grad() += n.grad.cwiseProduct(mask);
  });
}

Tensor lstm_cell(const Tensor& x, const Tensor& h, const Tensor& c, const Tensor& w, const Tensor& b) {
  const Eigen::Index n = h.rows();
  const Eigen::Index in = x.rows();
  if (x.cols() != 1 || h.cols() != 1 || c.cols() != 1 || c.rows() != n) shape_error("lstm_cell", h, c);
  if (w.rows() != 4 * n || w.cols() != in + n) shape_error("lstm_cell", w, x);
  if (b.rows() != 4 * n || b.cols() != 1) shape_error("lstm_cell", b, w);

  Vector pre = b.value();
  pre.noalias() += w.value().leftCols(in) * x.value();
  pre.noalias() += w.value().rightCols(n) * h.value();
  // Gate activations, kept for backward: [i; f; o; g].
  Vector gates(4 * n);
  for (Eigen::Index k = 0; k < 3 * n; ++k) gates(k) = stable_sigmoid(pre(k));
  gates.tail(n) = pre.tail(n).array().tanh();
  const auto i = gates.segment(0, n);
  const auto f = gates.segment(n, n);
  const auto o = gates.segment(2 * n, n);
  const auto g = gates.segment(3 * n, n);
  Vector c_next = f.cwiseProduct(c.value()) + i.cwiseProduct(g);
  Vector tanh_c = c_next.array().tanh();
  Matrix out(2 * n, 1);
  out.topRows(n) = o.cwiseProduct(tanh_c);
  out.bottomRows(n) = c_next;

  return make_result(std::move(out), {x, h, c, w, b}, [n, in, gates, tanh_c](Node& node) {
    const auto dh = node.grad.topRows(n);
    const auto& C = node.inputs[2]->value;
    const auto i = gates.segment(0, n).array();
    const auto f = gates.segment(n, n).array();
    const auto o = gates.segment(2 * n, n).array();
    const auto g = gates.segment(3 * n, n).array();
    const Vector dc = node.grad.bottomRows(n).array() + dh.array() * o * (1.0 - tanh_c.array().square());
    Vector dpre(4 * n);
    dpre.segment(0, n) = dc.array() * g * i * (1.0 - i);
    dpre.segment(n, n) = dc.array() * C.array() * f * (1.0 - f);
    dpre.segment(2 * n, n) = dh.array() * tanh_c.array() * o * (1.0 - o);
    dpre.segment(3 * n, n) = dc.array() * i * (1.0 - g.square());

    const auto& X = node.inputs[0];
    const auto& H = node.inputs[1];
    const auto& Cn = node.inputs[2];
    const auto& W = node.inputs[3];
    const auto& B = node.inputs[4];
    if (X->requires_grad) X->ensure_grad().noalias() += W->value.leftCols(in).transpose() * dpre;
    if (H->requires_grad) H->ensure_grad().noalias() += W->value.rightCols(n).transpose() * dpre;
    if (Cn->requires_grad) Cn->ensure_grad() += (dc.array() * f).matrix();
    if (W->requires_grad) {
      auto& gw = W->ensure_grad();
      gw.leftCols(in).noalias() += dpre * X->value.transpose();
      gw.rightCols(n).noalias() += dpre * H->value.transpose();
    }
    if (B->requires_grad) B->ensure_grad() += dpre;
  });
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.value().size() != 1) {
    throw ShapeError("backward requires a scalar loss, got " + loss.shape_string());
  }
  auto root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  if (root->backward) {
    root->grad = Matrix::Ones(1, 1);
  } else {
    root->ensure_grad()(0, 0) += 1.0;
  }
  // Interior gradients are consumed and released so that a second sweep
  // adds exactly one more copy of d(loss)/d(leaf).
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backward) continue;
    if (n->grad.size() != 0) n->backward(*n);
    n->grad.resize(0, 0);
  }
}

}  // namespace concode::tensor
