#include "sdjscc/optim.hpp"

#include <cmath>

namespace sdjscc {

template <typename T>
Adam<T>::Adam(AdamOptions options) : options_(options) {
  if (!(options_.lr > 0)) throw ConfigError("adam: learning rate must be > 0");
}

template <typename T>
void Adam<T>::step(std::span<Parameter<T>* const> params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i]->tensor.size(), 0.0);
      v_[i].assign(params[i]->tensor.size(), 0.0);
    }
  } else if (m_.size() != params.size()) {
    throw ContractError("adam: parameter list changed between steps");
  }
  for (const Parameter<T>* p : params) {
    if (!p->tensor.grad) continue;
    for (T g : *p->tensor.grad) {
      if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient in parameter '" + p->name + "'");
    }
  }
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<T>& p = *params[i];
    if (p.frozen || !p.tensor.grad) continue;
    std::vector<T>& grad = *p.tensor.grad;
    std::vector<double>& m = m_[i];
    std::vector<double>& v = v_[i];
    for (std::size_t j = 0; j < grad.size(); ++j) {
      const double g = grad[j];
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p.tensor.data[j] = static_cast<T>(p.tensor.data[j] - options_.lr * mhat / (std::sqrt(vhat) + options_.eps));
      grad[j] = T{0};
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace sdjscc
