#include "tensor.hpp"

namespace td {

std::string Shape::str() const {
  return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
         std::to_string(w);
}

std::string Shape::chw_str() const {
  return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

Tensor::Tensor(Shape s) : shape_(s) {
  if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1)
    fail(Errc::invalid_argument, "tensor dims must all be >= 1, got " + s.str());
  data_.assign(size_t(s.numel()), 0.0f);
}

Tensor Tensor::full(Shape s, float value) {
  Tensor t(s);
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

}  // namespace td
