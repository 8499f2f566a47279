#include "glyphlab/tensor.hpp"

#include <cmath>
#include <sstream>

#include "glyphlab/error.hpp"

namespace glyphlab {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Argument: return "argument error";
    case ErrorCode::Dimension: return "dimension error";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::CorruptFile: return "corrupt file";
    case ErrorCode::UnsupportedFormat: return "unsupported format";
    case ErrorCode::UnsupportedDepth: return "unsupported depth";
    case ErrorCode::EmptyDataset: return "empty dataset";
    case ErrorCode::Stratification: return "stratification error";
    case ErrorCode::UndefinedCurve: return "undefined curve";
  }
  return "unknown error";
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  require(data_.size() == shape_size(shape_), ErrorCode::Dimension,
          "tensor data length " + std::to_string(data_.size()) + " does not match shape " +
              shape_string(shape_));
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
  require(index.size() == shape_.size(), ErrorCode::Dimension, "index rank mismatch");
  std::size_t off = 0;
  std::size_t axis = 0;
  for (auto i : index) {
    require(i < shape_[axis], ErrorCode::Dimension, "index out of range");
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

double& Tensor::at(std::initializer_list<std::size_t> index) { return data_[offset(index)]; }
double Tensor::at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }

Tensor Tensor::reshaped(Shape shape) const {
  require(shape_size(shape) == data_.size(), ErrorCode::Dimension,
          "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  return Tensor(std::move(shape), data_);
}

std::span<const double> Tensor::slab(std::size_t i) const {
  require(!shape_.empty() && i < shape_[0], ErrorCode::Dimension, "slab index out of range");
  const std::size_t len = data_.size() / shape_[0];
  return std::span<const double>(data_).subspan(i * len, len);
}

std::span<double> Tensor::slab(std::size_t i) {
  require(!shape_.empty() && i < shape_[0], ErrorCode::Dimension, "slab index out of range");
  const std::size_t len = data_.size() / shape_[0];
  return std::span<double>(data_).subspan(i * len, len);
}

void Tensor::fill(double v) {
  for (auto& x : data_) x = v;
}

bool Tensor::all_finite() const noexcept {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

Tensor tensor_new(const Shape& shape, double fill) { return Tensor(shape, fill); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2, ErrorCode::Dimension, "matmul needs rank-2 operands");
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  require(b.extent(0) == k, ErrorCode::Dimension,
          "matmul inner extents differ: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  Tensor c({m, n});
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* pc = c.data().data();
  // i-t-j order keeps each c[i,j] accumulating in ascending t while the inner
  // loop streams rows of b.
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = pc + i * n;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = pa[i * k + t];
      const double* brow = pb + t * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t[i * n + i] = 1.0;
  return t;
}

}  // namespace glyphlab
