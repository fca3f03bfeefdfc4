#include "concode/tensor/parameters.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace concode::tensor {

Tensor& ParameterSet::add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  entries_.emplace_back(name, Tensor(Matrix::Zero(rows, cols), true));
  return entries_.back().second;
}

Tensor& ParameterSet::get(const std::string& name) {
  for (auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw std::out_of_range("no parameter '" + name + "'");
}

const Tensor& ParameterSet::get(const std::string& name) const { return const_cast<ParameterSet*>(this)->get(name); }

bool ParameterSet::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

std::size_t ParameterSet::num_values() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += static_cast<std::size_t>(t.value().size());
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

ParameterSet ParameterSet::clone() const {
  ParameterSet out;
  for (const auto& [name, t] : entries_) out.entries_.emplace_back(name, Tensor(t.value(), true));
  return out;
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
  for (auto& [name, t] : entries_) t.mutable_value() = other.get(name).value();
}

void uniform_fill(Tensor& t, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  auto& v = t.mutable_value();
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = dist(rng);
}

void xavier_uniform(Tensor& t, std::mt19937_64& rng) {
  uniform_fill(t, std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols())), rng);
}

double global_grad_norm(const ParameterSet& params) {
  double sq = 0;
  for (const auto& [name, t] : params.entries()) sq += t.grad().squaredNorm();
  return std::sqrt(sq);
}

double clip_grad_norm(ParameterSet& params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm > max_norm && std::isfinite(norm)) {
    const double s = max_norm / norm;
    for (auto& [name, t] : params.entries()) t.mutable_grad() *= s;
  }
  return norm;
}

Adam::Adam(ParameterSet& params, AdamOptions options) : params_(&params), options_(options) {
  for (const auto& [name, t] : params.entries()) {
    m_.push_back(Matrix::Zero(t.rows(), t.cols()));
    v_.push_back(Matrix::Zero(t.rows(), t.cols()));
  }
}

void Adam::step() {
  auto& entries = params_->entries();
  for (const auto& [name, t] : entries) {
    if (!t.grad().allFinite()) throw NonFiniteGradient("non-finite gradient in parameter '" + name + "'");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto& t = entries[k].second;
    const Matrix& g = t.grad();
    m_[k] = options_.beta1 * m_[k] + (1.0 - options_.beta1) * g;
    v_[k] = options_.beta2 * v_[k] + (1.0 - options_.beta2) * g.cwiseProduct(g);
    t.mutable_value().array() -=
        options_.lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + options_.eps);
  }
}

namespace {

constexpr char kMagic[4] = {'C', 'C', 'D', 'K'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kFloat64 = 8;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::istream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw CheckpointError(path + ": truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParameterSet& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path);
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params.entries()) {
    put(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put(out, std::uint32_t{2});
    put(out, static_cast<std::uint64_t>(t.rows()));
    put(out, static_cast<std::uint64_t>(t.cols()));
    put(out, kFloat64);
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major = t.value();
    out.write(reinterpret_cast<const char*>(row_major.data()),
              static_cast<std::streamsize>(row_major.size() * sizeof(double)));
  }
  if (!out) throw CheckpointError("error writing " + path);
}

void load_checkpoint(const std::string& path, ParameterSet& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError(path + ": not a checkpoint");
  const auto version = take<std::uint32_t>(in, path);
  if (version != kVersion) throw CheckpointError(path + ": unsupported version " + std::to_string(version));
  const auto count = take<std::uint32_t>(in, path);
  if (count != params.size()) {
    throw CheckpointError(path + ": has " + std::to_string(count) + " parameters, model expects " +
                          std::to_string(params.size()));
  }
  std::vector<std::pair<std::string, Matrix>> loaded;
  for (std::uint32_t r = 0; r < count; ++r) {
    const auto len = take<std::uint32_t>(in, path);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw CheckpointError(path + ": truncated checkpoint");
    if (!params.contains(name)) throw CheckpointError(path + ": unknown parameter '" + name + "'");
    const auto rank = take<std::uint32_t>(in, path);
    if (rank != 2) throw CheckpointError(path + ": parameter '" + name + "' has rank " + std::to_string(rank));
    const auto rows = static_cast<Eigen::Index>(take<std::uint64_t>(in, path));
    const auto cols = static_cast<Eigen::Index>(take<std::uint64_t>(in, path));
    const auto& expected = params.get(name);
    if (rows != expected.rows() || cols != expected.cols()) {
      std::ostringstream msg;
      msg << path << ": parameter '" << name << "' has shape [" << rows << "x" << cols << "], model expects "
          << expected.shape_string();
      throw CheckpointError(msg.str());
    }
    if (take<std::uint8_t>(in, path) != kFloat64) throw CheckpointError(path + ": unsupported precision tag");
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> values(rows, cols);
    if (!in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)))) {
      throw CheckpointError(path + ": truncated checkpoint");
    }
    loaded.emplace_back(name, values);
  }
  for (auto& [name, m] : loaded) params.get(name).mutable_value() = std::move(m);
}

GradCheckReport grad_check(const std::function<Tensor()>& f, std::vector<Tensor> inputs, double eps, double tol,
                           std::size_t coordinates, std::mt19937_64& rng, double floor) {
  for (auto& t : inputs) t.zero_grad();
  backward(f());
  std::vector<std::pair<std::size_t, Eigen::Index>> coords;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (Eigen::Index i = 0; i < inputs[k].value().size(); ++i) coords.emplace_back(k, i);
  }
  if (coordinates > 0 && coordinates < coords.size()) {
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(coordinates);
  }
  GradCheckReport report;
  NoGrad no_grad;
  for (const auto& [k, i] : coords) {
    double& x = inputs[k].mutable_value().data()[i];
    const double analytic = inputs[k].grad().data()[i];
    const double saved = x;
    x = saved + eps;
    const double up = f().item();
    x = saved - eps;
    const double down = f().item();
    x = saved;
    const double numeric = (up - down) / (2 * eps);
    const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
    report.max_rel_error = std::max(report.max_rel_error, rel);
    ++report.checked;
    if (!(rel < tol)) {
      std::ostringstream msg;
      msg << "input " << k << " entry " << i << ": analytic " << analytic << " numeric " << numeric << " rel " << rel;
      report.failures.push_back(msg.str());
    }
  }
  report.passed = report.failures.empty();
  return report;
}

}  // namespace concode::tensor
