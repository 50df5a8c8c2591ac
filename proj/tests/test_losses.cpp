#include <doctest.h>

#include "suites.hpp"

using namespace sdjscc;

TEST_CASE("pixel loss examples") {
  std::mt19937_64 rng(1);
  const Tensor<double> x = fd::random_tensor({2, 3, 4, 4}, rng, 0, 0.9);
  Tensor<double> shifted = x;
  for (double& v : shifted.data) v += 0.1;
  Tape<double> tape;
  CHECK(tape.value(pixel_loss(tape, tape.constant(x), tape.constant(x)))[0] == 0.0);
  CHECK(tape.value(pixel_loss(tape, tape.constant(x), tape.constant(shifted)))[0] == doctest::Approx(0.01).epsilon(1e-12));

  const Tensor<double> y = fd::random_tensor({2, 3, 4, 4}, rng, 0, 1);
  double direct = 0;
  for (std::size_t i = 0; i < x.size(); ++i) direct += (x[i] - y[i]) * (x[i] - y[i]);
  direct /= static_cast<double>(x.size());
  CHECK(std::abs(tape.value(pixel_loss(tape, tape.constant(x), tape.constant(y)))[0] - direct) <= 1e-12);
  CHECK_THROWS_AS(pixel_loss(tape, tape.constant(x), tape.constant(Tensor<double>({2, 3, 4, 5}, 0.0))),
                  DimensionError);
}

TEST_CASE("weighted feature distance, B=1 K=2 example") {
  // Map 0 differs by 0.5 in total squared norm, map 1 by 1.5.
  Tensor<double> clean({1, 2, 1, 2}, 0.0), recon({1, 2, 1, 2}, 0.0);
  recon[0] = 0.5;
  recon[1] = 0.5;  // 0.25 + 0.25
  recon[2] = 1.0;
  recon[3] = std::sqrt(0.5);  // 1 + 0.5
  Tape<double> tape;
  const std::vector<double> ones = {1, 1};
  CHECK(tape.value(weighted_feature_distance(tape, tape.constant(recon), clean, ones))[0] ==
        doctest::Approx(2.0).epsilon(1e-15));
  const std::vector<double> w = {2, 0.5};
  CHECK(tape.value(weighted_feature_distance(tape, tape.constant(recon), clean, w))[0] ==
        doctest::Approx(1.75).epsilon(1e-15));
}

TEST_CASE("all-ones weights reproduce the unweighted feature loss") {
  CHECK(suites::ablation_loss_gap(50, 2) <= 1e-9);
}

TEST_CASE("semantic loss properties") {
  TaskNetwork<double> net(suites::tiny_task_arch(), 3);
  net.freeze();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 2);
  for (int t = 0; t < 30; ++t) {
    const Tensor<double> x = fd::random_tensor({2, 3, 8, 8}, rng, 0, 1), xr = fd::random_tensor({2, 3, 8, 8}, rng, 0, 1);
    std::vector<double> w = {u(rng), u(rng), u(rng)};
    const double L = semantic_loss_value(net, x, xr, w);
    CHECK(L >= 0);
    CHECK(semantic_loss_value(net, x, x, w) == 0.0);

    const double s = 0.1 + u(rng) * 5;
    std::vector<double> ws = w;
    for (double& v : ws) v *= s;
    CHECK(semantic_loss_value(net, x, xr, ws) == doctest::Approx(s * L).epsilon(1e-12));

    const auto parts = semantic_components(net, x, xr, w);
    double total = 0;
    for (double p : parts) total += p;
    CHECK(total == doctest::Approx(L).epsilon(1e-12));
  }
}

TEST_CASE("semantic loss gradient w.r.t. the decoder output matches finite differences") {
  TaskNetwork<double> net(suites::tiny_task_arch(), 4);
  net.freeze();
  std::mt19937_64 rng(4);
  const Tensor<double> x = fd::random_tensor({2, 3, 8, 8}, rng, 0, 1), xr = fd::random_tensor({2, 3, 8, 8}, rng, 0, 1);
  const std::vector<double> w = {0.3, 2.0, 0.7};
  const fd::Report rep = fd::check_inputs(
      [&](Tape<double>& t, const std::vector<Var>& v) { return semantic_loss(t, net, x, v[0], w); }, {xr});
  INFO(rep.worst);
  CHECK(rep.max_rel_error < 1e-3);
}

TEST_CASE("semantic loss contracts") {
  TaskNetwork<double> net(suites::tiny_task_arch(), 5);
  const Tensor<double> x({1, 3, 8, 8}, 0.5);
  Tape<double> tape;
  const std::vector<double> w3 = {1, 1, 1}, w2 = {1, 1};
  CHECK_THROWS_AS(semantic_loss(tape, net, x, tape.constant(x), w3), ContractError);
  net.freeze();
  CHECK_THROWS_AS(semantic_loss(tape, net, x, tape.constant(x), w2), ConfigError);
}

TEST_CASE("clean features stay constant: only the reconstruction gets gradient") {
  TaskNetwork<double> net(suites::tiny_task_arch(), 6);
  net.freeze();
  std::mt19937_64 rng(6);
  const Tensor<double> x = fd::random_tensor({1, 3, 8, 8}, rng, 0, 1), xr = fd::random_tensor({1, 3, 8, 8}, rng, 0, 1);
  Tape<double> tape;
  Var r = tape.leaf(xr);
  const std::vector<double> w = {1, 1, 1};
  tape.backward(semantic_loss(tape, net, x, r, w));
  CHECK(tape.has_grad(r));
  for (Parameter<double>* p : net.parameters()) CHECK_FALSE(p->tensor.grad.has_value());
}
