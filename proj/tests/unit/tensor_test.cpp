#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "concode/tensor/parameters.hpp"
#include "concode/tensor/tensor.hpp"

using namespace concode::tensor;

namespace {

Tensor random_tensor(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros(rows, cols, true);
  uniform_fill(t, scale, rng);
  return t;
}

Tensor vec(std::initializer_list<double> xs) {
  Matrix m(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) m(i++, 0) = x;
  return Tensor(m, true);
}

void expect_grad_ok(const std::function<Tensor()>& f, std::vector<Tensor> inputs, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  const auto report = grad_check(f, std::move(inputs), 1e-5, 1e-4, 0, rng);
  EXPECT_TRUE(report.passed) << report.max_rel_error << " " << (report.failures.empty() ? "" : report.failures[0]);
}

// Weighted sum with fixed random weights, so every output entry matters.
Tensor probe(const Tensor& t, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  Matrix w(t.rows(), t.cols());
  std::uniform_real_distribution<double> d(-1, 1);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = d(rng);
  return sum(mul(t, Tensor(w)));
}

}  // namespace

TEST(Ops, SoftmaxOfZerosIsUniform) {
  const auto s = softmax(Tensor(Matrix::Zero(2, 1)));
  EXPECT_DOUBLE_EQ(s.value()(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(s.value()(1, 0), 0.5);
}

TEST(Ops, TanhAtZero) {
  auto x = vec({0.0});
  auto y = tanh(x);
  EXPECT_EQ(y.item(), 0.0);
  backward(y);
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 1.0);
}

TEST(Ops, LstmCellWithZeroWeightsGivesZeroHidden) {
  std::mt19937_64 rng(4);
  const Eigen::Index n = 3;
  auto x = random_tensor(5, 1, rng);
  auto h = random_tensor(n, 1, rng);
  auto c = random_tensor(n, 1, rng);
  const auto out = lstm_cell(x, h, c, Tensor::zeros(4 * n, 5 + n), Tensor::zeros(4 * n, 1));
  // All gates are 0.5 and the candidate is 0, so c' = c/2 and h' = tanh(c/2)/2.
  for (Eigen::Index i = 0; i < n; ++i) {
    EXPECT_NEAR(out.value()(n + i, 0), 0.5 * c.value()(i, 0), 1e-15);
    EXPECT_NEAR(out.value()(i, 0), 0.5 * std::tanh(0.5 * c.value()(i, 0)), 1e-15);
  }
  const auto zero_state = lstm_cell(x, h, Tensor::zeros(n, 1), Tensor::zeros(4 * n, 5 + n), Tensor::zeros(4 * n, 1));
  EXPECT_TRUE(zero_state.value().topRows(n).isZero());
}

TEST(Ops, ShapeMismatchNamesBothShapes) {
  try {
    matmul(Tensor::zeros(2, 3), Tensor::zeros(2, 1));
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("[2x1]"), std::string::npos);
  }
  EXPECT_THROW(embedding_lookup(Tensor::zeros(4, 3), 3), ShapeError);
  EXPECT_THROW(add(Tensor::zeros(2, 1), Tensor::zeros(3, 1)), ShapeError);
}

TEST(Ops, SoftmaxNormalizesAndIsNonnegative) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = softmax(random_tensor(1 + trial % 17, 3, rng, 30.0));
    EXPECT_GE(s.value().minCoeff(), 0.0);
    for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(s.value().col(j).sum(), 1.0, 1e-6);
  }
}

TEST(Ops, DropoutIdentityAtEval) {
  std::mt19937_64 rng(1);
  auto x = random_tensor(50, 1, rng);
  const auto y = dropout(x, 0.5, false, rng);
  EXPECT_EQ(y.value(), x.value());
}

TEST(Ops, DropoutPreservesExpectationAtTrain) {
  std::mt19937_64 rng(2);
  const std::size_t n = 100000;
  const double p = 0.5;
  const auto y = dropout(Tensor(Matrix::Ones(static_cast<Eigen::Index>(n), 1)), p, true, rng);
  const double mean = y.value().mean();
  // Each output is 0 or 1/(1-p): variance p/(1-p).
  const double sigma = std::sqrt(p / (1 - p) / static_cast<double>(n));
  EXPECT_NEAR(mean, 1.0, 3 * sigma);
  EXPECT_THROW(dropout(y, 1.0, true, rng), std::invalid_argument);
}

TEST(Ops, ConcatSplitsGradientExactly) {
  std::mt19937_64 rng(5);
  auto a = random_tensor(3, 1, rng);
  auto b = random_tensor(4, 1, rng);
  auto c = random_tensor(2, 1, rng);
  const auto joined = concat({a, b, c});
  Matrix upstream = Matrix::Random(9, 1);
  backward(sum(mul(joined, Tensor(upstream))));
  Matrix combined(9, 1);
  combined << a.grad(), b.grad(), c.grad();
  EXPECT_EQ(combined, upstream);
}

TEST(Backward, MatmulGradientIsOnesTimesXTranspose) {
  std::mt19937_64 rng(3);
  auto w = random_tensor(3, 4, rng);
  Tensor x(Matrix::Random(4, 1));
  backward(sum(matmul(w, x)));
  const Matrix expected = Matrix::Ones(3, 1) * x.value().transpose();
  EXPECT_TRUE(w.grad().isApprox(expected, 1e-15));
}

TEST(Backward, UnconnectedParameterHasZeroGrad) {
  std::mt19937_64 rng(3);
  auto w = random_tensor(2, 2, rng);
  auto unused = random_tensor(2, 2, rng);
  backward(sum(w));
  EXPECT_TRUE(unused.grad().isZero());
}

TEST(Backward, RepeatedCallsAccumulate) {
  std::mt19937_64 rng(3);
  auto w = random_tensor(2, 3, rng);
  Tensor x(Matrix::Random(3, 1));
  const auto loss = sum(tanh(matmul(w, x)));
  backward(loss);
  const Matrix once = w.grad();
  backward(loss);
  EXPECT_TRUE(w.grad().isApprox(2 * once, 1e-14));
}

TEST(Backward, NonScalarLossThrows) { EXPECT_THROW(backward(Tensor::zeros(2, 1, true)), ShapeError); }

TEST(Backward, NoGradRecordsNothing) {
  auto w = vec({1.0, 2.0});
  NoGrad guard;
  const auto y = sum(w);
  EXPECT_FALSE(y.requires_grad());
}

TEST(Backward, LongChainsReleaseWithoutRecursion) {
  auto x = vec({0.1});
  Tensor y = x;
  for (int i = 0; i < 200000; ++i) y = affine(y, 1.0, 0.0);
  EXPECT_NEAR(y.item(), 0.1, 1e-15);
}

TEST(GradCheck, Square) {
  auto x = vec({3.0});
  std::mt19937_64 rng(0);
  const auto report = grad_check([&] { return mul(x, x); }, {x}, 1e-5, 1e-8, 0, rng);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(GradCheck, EveryPrimitive) {
  std::mt19937_64 rng(12);
  auto a = random_tensor(4, 3, rng);
  auto b = random_tensor(3, 2, rng);
  auto c = random_tensor(4, 3, rng);
  auto v = random_tensor(4, 1, rng);
  auto s = random_tensor(1, 1, rng);
  auto pos = Tensor((Matrix::Random(4, 3).array().abs() + 0.5).matrix(), true);
  expect_grad_ok([&] { return probe(matmul(a, b)); }, {a, b});
  expect_grad_ok([&] { return probe(matmul_tn(a, c)); }, {a, c});
  expect_grad_ok([&] { return probe(add(a, c)); }, {a, c});
  expect_grad_ok([&] { return probe(sub(a, c)); }, {a, c});
  expect_grad_ok([&] { return probe(mul(a, c)); }, {a, c});
  expect_grad_ok([&] { return probe(affine(a, -1.7, 0.3)); }, {a});
  expect_grad_ok([&] { return probe(scale_by(a, s)); }, {a, s});
  expect_grad_ok([&] { return probe(concat({a, c})); }, {a, c});
  expect_grad_ok([&] { return probe(slice_rows(a, 1, 2)); }, {a});
  expect_grad_ok([&] { return element(a, 2, 1); }, {a});
  expect_grad_ok([&] { return sum(a); }, {a});
  expect_grad_ok([&] { return probe(tanh(a)); }, {a});
  expect_grad_ok([&] { return probe(sigmoid(a)); }, {a});
  expect_grad_ok([&] { return probe(softmax(a)); }, {a});
  expect_grad_ok([&] { return probe(log(pos)); }, {pos});
  expect_grad_ok([&] { return probe(embedding_lookup(a, 2)); }, {a});
  const std::vector<int> rows = {3, 0, 3};
  expect_grad_ok([&] { return probe(gather_rows(a, rows)); }, {a});
  auto w = random_tensor(4, 1, rng);
  expect_grad_ok([&] { return probe(hconcat(std::vector<Tensor>{v, w})); }, {v, w});
  expect_grad_ok(
      [&] {
        std::mt19937_64 fixed(7);
        return probe(dropout(a, 0.3, true, fixed));
      },
      {a});
}

TEST(GradCheck, LstmCellRandomCoordinates) {
  std::mt19937_64 rng(21);
  const Eigen::Index n = 4, in = 3;
  auto x = random_tensor(in, 1, rng);
  auto h = random_tensor(n, 1, rng);
  auto c = random_tensor(n, 1, rng);
  auto w = random_tensor(4 * n, in + n, rng);
  auto b = random_tensor(4 * n, 1, rng);
  const auto f = [&] { return probe(lstm_cell(x, h, c, w, b)); };
  std::mt19937_64 pick(5);
  const auto report = grad_check(f, {x, h, c, w, b}, 1e-5, 1e-4, 10, pick);
  EXPECT_EQ(report.checked, 10u);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
  const auto full = grad_check(f, {x, h, c, w, b}, 1e-5, 1e-4, 0, pick);
  EXPECT_TRUE(full.passed) << full.max_rel_error;
}

TEST(GradCheck, RandomizedShapes) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index r = 1 + rng() % 5, k = 1 + rng() % 5, cols = 1 + rng() % 3;
    auto a = random_tensor(r, k, rng);
    auto b = random_tensor(k, cols, rng);
    expect_grad_ok([&] { return probe(softmax(tanh(matmul(a, b))), trial); }, {a, b}, trial);
  }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ParameterSet params;
  std::mt19937_64 rng(1);
  auto& w = params.add("w", 3, 2);
  uniform_fill(w, 1.0, rng);
  const Matrix before = w.value();
  Adam adam(params);
  params.zero_grad();
  w.mutable_grad().setZero();
  for (int i = 0; i < 5; ++i) adam.step();
  EXPECT_EQ(w.value(), before);
}

TEST(Adam, ConstantGradientStepApproachesLr) {
  ParameterSet params;
  auto& w = params.add("w", 2, 1);
  Adam adam(params, {.lr = 0.001});
  EXPECT_DOUBLE_EQ(adam.lr(), 0.001);
  w.mutable_grad() << 0.3, -2.0;
  Matrix prev = w.value();
  for (int t = 0; t < 1000; ++t) {
    prev = w.value();
    adam.step();
  }
  // With a constant gradient, both corrected moments equal g exactly, so each
  // step is lr * g / (|g| + eps).
  const Matrix step = w.value() - prev;
  EXPECT_NEAR(step(0, 0), -0.001 * 0.3 / (0.3 + 1e-8), 1e-12);
  EXPECT_NEAR(step(1, 0), 0.001 * 2.0 / (2.0 + 1e-8), 1e-12);
}

TEST(Adam, NonFiniteGradientAborts) {
  ParameterSet params;
  auto& w = params.add("w", 2, 1);
  Adam adam(params);
  w.mutable_grad() << 1.0, std::nan("");
  EXPECT_THROW(adam.step(), NonFiniteGradient);
  EXPECT_TRUE(w.value().isZero());
  EXPECT_EQ(adam.steps(), 0);
}

TEST(Clip, GlobalNormClipping) {
  ParameterSet params;
  auto& a = params.add("a", 1, 1);
  auto& b = params.add("b", 1, 1);
  a.mutable_grad() << 6.0;
  b.mutable_grad() << 8.0;
  EXPECT_DOUBLE_EQ(clip_grad_norm(params, 5.0), 10.0);
  EXPECT_NEAR(global_grad_norm(params), 5.0, 1e-12);
  EXPECT_NEAR(a.grad()(0, 0), 3.0, 1e-12);
}

TEST(Init, XavierBounds) {
  std::mt19937_64 rng(0);
  Tensor t = Tensor::zeros(30, 20, true);
  xavier_uniform(t, rng);
  const double bound = std::sqrt(6.0 / 50.0);
  EXPECT_LE(t.value().cwiseAbs().maxCoeff(), bound);
  EXPECT_GT(t.value().cwiseAbs().maxCoeff(), 0.9 * bound);
}

TEST(Checkpoint, RoundTripAndValidation) {
  std::mt19937_64 rng(9);
  ParameterSet params;
  uniform_fill(params.add("enc.w", 3, 5), 1.0, rng);
  uniform_fill(params.add("b", 7, 1), 1.0, rng);
  const auto path = (std::filesystem::temp_directory_path() / "concode_ckpt.bin").string();
  save_checkpoint(path, params);

  ParameterSet copy;
  copy.add("enc.w", 3, 5);
  copy.add("b", 7, 1);
  load_checkpoint(path, copy);
  EXPECT_EQ(copy.get("enc.w").value(), params.get("enc.w").value());
  EXPECT_EQ(copy.get("b").value(), params.get("b").value());

  ParameterSet wrong_shape;
  wrong_shape.add("enc.w", 5, 3);
  wrong_shape.add("b", 7, 1);
  EXPECT_THROW(load_checkpoint(path, wrong_shape), CheckpointError);
  ParameterSet wrong_name;
  wrong_name.add("enc.W", 3, 5);
  wrong_name.add("b", 7, 1);
  EXPECT_THROW(load_checkpoint(path, wrong_name), CheckpointError);

  // Values are stored row-major after the header.
  std::ifstream in(path, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  EXPECT_EQ(std::string(magic, 4), "CCDK");
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path, copy), CheckpointError);
}
