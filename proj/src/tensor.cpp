#include "sdjscc/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

namespace sdjscc {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void require_shape(const Shape& actual, const Shape& expected, std::string_view what) {
  if (actual.size() != expected.size()) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(expected.size()) +
                         " " + shape_string(expected) + ", got " + shape_string(actual));
  }
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] != expected[i]) {
      throw DimensionError(std::string(what) + ": axis " + std::to_string(i) + " is " +
                           std::to_string(actual[i]) + ", expected " + std::to_string(expected[i]));
    }
  }
}

template <typename T>
Tensor<T>::Tensor(Shape s, T fill) : shape(std::move(s)), data(numel(shape), fill) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor shape " + shape_string(shape) + " has a zero axis");
  }
}

template <typename T>
Tensor<T>::Tensor(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
  if (numel(shape) != data.size()) {
    throw DimensionError("tensor shape " + shape_string(shape) + " needs " +
                         std::to_string(numel(shape)) + " values, got " + std::to_string(data.size()));
  }
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  if (axis >= shape.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape));
  }
  return shape[axis];
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (grad) std::fill(grad->begin(), grad->end(), T{0});
}

template <typename T>
std::vector<T>& Tensor<T>::ensure_grad() {
  if (!grad || grad->size() != data.size()) grad.emplace(data.size(), T{0});
  return *grad;
}

template <typename T>
void Tensor<T>::check_finite(std::string_view what) const {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw NumericError(std::string(what) + ": non-finite value at flat index " + std::to_string(i));
    }
  }
}

template struct Tensor<float>;
template struct Tensor<double>;

}  // namespace sdjscc
