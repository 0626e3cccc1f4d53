#ifndef XLNER_TENSOR_HPP_
#define XLNER_TENSOR_HPP_

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

namespace xlner {

#ifdef XLNER_SINGLE_PRECISION
using Real = float;
#else
using Real = double;
#endif

using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;

// Parameter and gradient storage.
using RealBuffer = std::vector<Real, Eigen::aligned_allocator<Real>>;

struct TensorInfo {
  std::string name;   // unique, e.g. "bilstm.fwd.0.W"
  std::string group;  // grad-check / reporting group, e.g. "bilstm"
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

// All trainable tensors of a model live in one flat column-major buffer;
// gradients use a second buffer with the same layout.
class ParameterStore {
 public:
  // Returns the tensor id. Names must be unique.
  int add(std::string name, std::string group, int rows, int cols);

  std::size_t size() const { return values_.size(); }
  int num_tensors() const { return static_cast<int>(tensors_.size()); }
  const TensorInfo& info(int id) const { return tensors_[static_cast<std::size_t>(id)]; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  int find(const std::string& name) const;  // -1 when absent

  RealBuffer& values() { return values_; }
  const RealBuffer& values() const { return values_; }

  MatMap map(int id) { return map(values_, id); }
  ConstMatMap map(int id) const { return map(values_, id); }

  // Views of any buffer laid out like this store (e.g. a gradient).
  MatMap map(RealBuffer& buffer, int id) const {
    const auto& t = tensors_[static_cast<std::size_t>(id)];
    return MatMap(buffer.data() + t.offset, t.rows, t.cols);
  }
  ConstMatMap map(const RealBuffer& buffer, int id) const {
    const auto& t = tensors_[static_cast<std::size_t>(id)];
    return ConstMatMap(buffer.data() + t.offset, t.rows, t.cols);
  }

  RealBuffer zeros() const { return RealBuffer(values_.size(), Real(0)); }

 private:
  std::vector<TensorInfo> tensors_;
  RealBuffer values_;
};

}  // namespace xlner

#endif  // XLNER_TENSOR_HPP_
