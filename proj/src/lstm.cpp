#include "xlner/lstm.hpp"

#include <cmath>

#include "xlner/error.hpp"

namespace xlner {

namespace {

inline Real sigmoid(Real x) { return Real(1) / (Real(1) + std::exp(-x)); }

}  // namespace

int ParameterStore::add(std::string name, std::string group, int rows, int cols) {
  if (find(name) >= 0) fail(ErrorKind::kUsage, "duplicate tensor name " + name);
  if (rows <= 0 || cols <= 0) fail(ErrorKind::kUsage, "tensor " + name + " needs positive shape");
  TensorInfo t{std::move(name), std::move(group), values_.size(), rows, cols};
  values_.resize(values_.size() + t.size(), Real(0));
  tensors_.push_back(std::move(t));
  return static_cast<int>(tensors_.size()) - 1;
}

int ParameterStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

LstmLayer::LstmLayer(ParameterStore& store, const std::string& name, const std::string& group, int input_size,
                     int hidden_size)
    : input_(input_size), hidden_(hidden_size) {
  weight_ = store.add(name + ".W", group, 4 * hidden_size, input_size + hidden_size);
  bias_ = store.add(name + ".b", group, 4 * hidden_size, 1);
}

LstmLayer::Cache LstmLayer::forward(const ParameterStore& store, const Mat& x) const {
  const int h = hidden_;
  const auto steps = x.cols();
  const auto w = store.map(weight_);
  const auto b = store.map(bias_);
  Cache cache;
  cache.x = x;
  cache.gates.resize(4 * h, steps);
  cache.cell.resize(h, steps);
  cache.tanh_c.resize(h, steps);
  cache.hidden.resize(h, steps);
  Mat pre = w.leftCols(input_) * x;
  pre.colwise() += b.col(0);
  Vec z(4 * h);
  for (Eigen::Index t = 0; t < steps; ++t) {
    z = pre.col(t);
    if (t > 0) z.noalias() += w.rightCols(h) * cache.hidden.col(t - 1);
    auto gates = cache.gates.col(t);
    for (int j = 0; j < 3 * h; ++j) gates(j) = sigmoid(z(j));
    for (int j = 3 * h; j < 4 * h; ++j) gates(j) = std::tanh(z(j));
    auto c = cache.cell.col(t);
    c = gates.segment(0, h).cwiseProduct(gates.segment(3 * h, h));
    if (t > 0) c += gates.segment(h, h).cwiseProduct(cache.cell.col(t - 1));
    cache.tanh_c.col(t) = c.array().tanh().matrix();
    cache.hidden.col(t) = gates.segment(2 * h, h).cwiseProduct(cache.tanh_c.col(t));
  }
  return cache;
}

Mat LstmLayer::backward(const ParameterStore& store, const Cache& cache, const Mat& d_hidden,
                        RealBuffer& grad) const {
  const int h = hidden_;
  const auto steps = cache.x.cols();
  const auto w = store.map(weight_);
  Mat dz(4 * h, steps);
  Vec dh_next = Vec::Zero(h);
  Vec dc_next = Vec::Zero(h);
  Vec dh(h), dc(h);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const auto gates = cache.gates.col(t);
    const auto i = gates.segment(0, h).array();
    const auto f = gates.segment(h, h).array();
    const auto o = gates.segment(2 * h, h).array();
    const auto g = gates.segment(3 * h, h).array();
    const auto tc = cache.tanh_c.col(t).array();
    dh = d_hidden.col(t) + dh_next;
    dc = (dh.array() * o * (Real(1) - tc * tc)).matrix() + dc_next;
    auto out = dz.col(t);
    out.segment(0, h) = (dc.array() * g * i * (Real(1) - i)).matrix();
    if (t > 0) {
      out.segment(h, h) = (dc.array() * cache.cell.col(t - 1).array() * f * (Real(1) - f)).matrix();
    } else {
      out.segment(h, h).setZero();
    }
    out.segment(2 * h, h) = (dh.array() * tc * o * (Real(1) - o)).matrix();
    out.segment(3 * h, h) = (dc.array() * i * (Real(1) - g * g)).matrix();
    dc_next = (dc.array() * f).matrix();
    dh_next.noalias() = w.rightCols(h).transpose() * out;
  }
  auto dw = store.map(grad, weight_);
  auto db = store.map(grad, bias_);
  dw.leftCols(input_).noalias() += dz * cache.x.transpose();
  if (steps > 1) {
    dw.rightCols(h).noalias() += dz.rightCols(steps - 1) * cache.hidden.leftCols(steps - 1).transpose();
  }
  db.col(0) += dz.rowwise().sum();
  return w.leftCols(input_).transpose() * dz;
}

void LstmLayer::initialize(ParameterStore& store, SplitMix64& rng) const {
  const int h = hidden_;
  auto w = store.map(weight_);
  auto b = store.map(bias_);
  const double limit = std::sqrt(6.0 / static_cast<double>(input_ + h));
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (int c = 0; c < input_; ++c) w(r, c) = static_cast<Real>(rng.uniform(-limit, limit));
  }
  for (int gate = 0; gate < 4; ++gate) {
    Eigen::MatrixXd gaussian(h, h);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < h; ++c) gaussian(r, c) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < h; ++c) {
      if (r(c, c) < 0) q.col(c) *= -1.0;
    }
    w.block(gate * h, input_, h, h) = q.cast<Real>();
  }
  b.setZero();
  b.block(h, 0, h, 1).setConstant(Real(1));
}

}  // namespace xlner
