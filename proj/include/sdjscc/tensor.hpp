#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdjscc/errors.hpp"

namespace sdjscc {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array. `grad` is only populated for tensors that take part
// in differentiation (parameters, retained leaves).
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> data;
  bool requires_grad = false;
  std::optional<std::vector<T>> grad;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T{0});
  Tensor(Shape s, std::vector<T> values);

  std::size_t size() const { return data.size(); }
  std::size_t ndim() const { return shape.size(); }
  std::size_t dim(std::size_t axis) const;

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  std::span<T> values() { return data; }
  std::span<const T> values() const { return data; }

  void zero_grad();
  std::vector<T>& ensure_grad();

  // Throws NumericError naming `what` on the first NaN/Inf.
  void check_finite(std::string_view what) const;
};

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& src) {
  Tensor<To> out;
  out.shape = src.shape;
  out.data.assign(src.data.begin(), src.data.end());
  out.requires_grad = src.requires_grad;
  return out;
}

// Throws DimensionError naming the first axis where `actual` differs.
void require_shape(const Shape& actual, const Shape& expected, std::string_view what);

extern template struct Tensor<float>;
extern template struct Tensor<double>;

}  // namespace sdjscc
