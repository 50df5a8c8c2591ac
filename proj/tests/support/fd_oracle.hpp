#pragma once

// Central finite differences against the tape's reverse-mode gradients, in
// double precision. An element whose error exceeds `kRetryAbove` is retried
// with h/10 and h/100 and keeps the best match: networks with ReLUs are only
// piecewise smooth, and a step that straddles a kink says nothing about the
// gradient on either side of it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sdjscc/tape.hpp"

namespace fd {

using sdjscc::Parameter;
using sdjscc::Tape;
using sdjscc::Tensor;
using sdjscc::Var;

struct Report {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // description of the worst element
};

// |a - n| / max(|a|, |n|, floor).
inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline constexpr double kRetryAbove = 5e-5;

// Best relative error of `analytic` against central differences of `at`
// (the function value with the element moved by the given offset).
inline std::pair<double, double> compare(double analytic, const std::function<double(double)>& at, double h) {
  double best = INFINITY, best_numeric = 0;
  for (int attempt = 0; attempt < 3; ++attempt, h /= 10) {
    const double numeric = (at(h) - at(-h)) / (2 * h);
    const double e = rel_error(analytic, numeric);
    if (e < best) best = e, best_numeric = numeric;
    if (best <= kRetryAbove) break;
  }
  return {best, best_numeric};
}

// Builds a scalar loss from the given input leaves.
using Program = std::function<Var(Tape<double>&, const std::vector<Var>&)>;

inline double eval(const Program& f, const std::vector<Tensor<double>>& inputs) {
  Tape<double> tape;
  tape.set_grad_enabled(false);
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.constant(t));
  return tape.value(f(tape, vars))[0];
}

// Checks every input element (or `max_per_input` randomly chosen ones).
inline Report check_inputs(const Program& f, std::vector<Tensor<double>> inputs, double h = 1e-5,
                           std::size_t max_per_input = 0, std::uint64_t seed = 1) {
  Tape<double> tape;
  std::vector<Var> vars;
  for (const auto& t : inputs) vars.push_back(tape.leaf(t));
  Var out = f(tape, vars);
  tape.backward(out);
  Report rep;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::vector<std::size_t> idx(inputs[i].size());
    for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
    if (max_per_input && idx.size() > max_per_input) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(max_per_input);
    }
    const bool reached = tape.has_grad(vars[i]);
    for (std::size_t j : idx) {
      const double analytic = reached ? tape.grad(vars[i])[j] : 0.0;
      const double saved = inputs[i][j];
      const auto [e, numeric] = compare(
          analytic,
          [&](double d) {
            inputs[i][j] = saved + d;
            const double v = eval(f, inputs);
            inputs[i][j] = saved;
            return v;
          },
          h);
      ++rep.checked;
      if (e >= rep.max_rel_error) {
        rep.max_rel_error = e;
        rep.worst = "input " + std::to_string(i) + "[" + std::to_string(j) + "] analytic " +
                    std::to_string(analytic) + " numeric " + std::to_string(numeric);
      }
    }
  }
  return rep;
}

// Checks parameter gradients of `loss()` (which records on a fresh tape and
// returns the scalar value after running backward when `backward` is true).
inline Report check_parameters(const std::vector<Parameter<double>*>& params,
                               const std::function<double(bool backward)>& loss, double h = 1e-5,
                               std::size_t max_per_param = 0, std::uint64_t seed = 2) {
  for (Parameter<double>* p : params) p->tensor.zero_grad();
  loss(true);
  std::vector<std::vector<double>> analytic;
  for (Parameter<double>* p : params) {
    analytic.push_back(p->tensor.grad ? *p->tensor.grad : std::vector<double>(p->tensor.size(), 0.0));
  }
  Report rep;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& data = params[i]->tensor.data;
    std::vector<std::size_t> idx(data.size());
    for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
    if (max_per_param && idx.size() > max_per_param) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(max_per_param);
    }
    for (std::size_t j : idx) {
      const double saved = data[j];
      const auto [e, numeric] = compare(
          analytic[i][j],
          [&](double d) {
            data[j] = saved + d;
            const double v = loss(false);
            data[j] = saved;
            return v;
          },
          h);
      ++rep.checked;
      if (e >= rep.max_rel_error) {
        rep.max_rel_error = e;
        rep.worst = params[i]->name + "[" + std::to_string(j) + "] analytic " + std::to_string(analytic[i][j]) +
                    " numeric " + std::to_string(numeric);
      }
    }
  }
  for (Parameter<double>* p : params) p->tensor.zero_grad();
  return rep;
}

inline Tensor<double> random_tensor(const sdjscc::Shape& shape, std::mt19937_64& rng, double lo = -1.0,
                                    double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<double> t(shape, 0.0);
  for (double& v : t.data) v = u(rng);
  return t;
}

}  // namespace fd
