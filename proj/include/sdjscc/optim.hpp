#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sdjscc/tape.hpp"

namespace sdjscc {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are bound to parameters by
// position, so step() must always receive the same parameter list.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamOptions options);

  // Applies one update from each parameter's accumulated grad, then zeroes
  // the grads. Parameters without a grad are left untouched. A NaN/Inf grad
  // raises NumericError naming the parameter, before anything is modified.
  void step(std::span<Parameter<T>* const> params);

  std::int64_t steps_taken() const { return t_; }
  const AdamOptions& options() const { return options_; }

 private:
  AdamOptions options_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

template <typename T>
void zero_grads(std::span<Parameter<T>* const> params) {
  for (Parameter<T>* p : params) p->tensor.zero_grad();
}

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace sdjscc
