// Dense NCHW float tensor, the value type every kernel consumes and produces.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"

namespace td {

struct Shape {
  int n = 0, c = 0, h = 0, w = 0;

  int64_t numel() const { return int64_t(n) * c * h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;  // "1x3x300x300"
  std::string chw_str() const;  // "3x300x300", batch omitted
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape s);
  Tensor(int n, int c, int h, int w) : Tensor(Shape{n, c, h, w}) {}
  static Tensor full(Shape s, float value);

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  int64_t numel() const { return int64_t(data_.size()); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }

  float* plane(int n, int c) {
    return data_.data() + (int64_t(n) * shape_.c + c) * shape_.h * shape_.w;
  }
  const float* plane(int n, int c) const {
    return data_.data() + (int64_t(n) * shape_.c + c) * shape_.h * shape_.w;
  }

  float& at(int n, int c, int y, int x) {
    return data_[((int64_t(n) * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }
  float at(int n, int c, int y, int x) const {
    return data_[((int64_t(n) * shape_.c + c) * shape_.h + y) * shape_.w + x];
  }

 private:
  Shape shape_{};
  std::vector<float> data_;
};

}  // namespace td
