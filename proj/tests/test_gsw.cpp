#include <doctest.h>

#include "suites.hpp"

using namespace sdjscc;

namespace {

TaskArch two_class_arch(std::size_t feature_layer) {
  TaskArch a = suites::tiny_task_arch();
  a.num_classes = 2;
  a.feature_layer = feature_layer;
  return a;
}

// Per-image class-averaged weights by brute force: central differences of every logit
// with respect to every feature element, spatially averaged, class averaged.
std::vector<double> fd_image_weights(TaskNetwork<double>& net, const Tensor<double>& image) {
  Tensor<double> f = net.extract_features(image);
  const FeatureGeometry g = net.geometry();
  const std::size_t C = net.arch().num_classes, area = g.M * g.N;
  auto logits = [&] {
    Tape<double> t;
    t.set_grad_enabled(false);
    return t.value(net.head(t, t.constant(f)));
  };
  std::vector<double> w(g.K, 0.0);
  const double h = 1e-6;
  for (std::size_t k = 0; k < g.K; ++k)
    for (std::size_t i = 0; i < area; ++i) {
      double& v = f[k * area + i];
      const double saved = v;
      v = saved + h;
      const Tensor<double> up = logits();
      v = saved - h;
      const Tensor<double> down = logits();
      v = saved;
      for (std::size_t c = 0; c < C; ++c) w[k] += (up[c] - down[c]) / (2 * h) / static_cast<double>(area * C);
    }
  return w;
}

}  // namespace

TEST_CASE("per-class weight examples") {
  SUBCASE("y = sum of f_k gives 1") {
    Tape<double> tape;
    Var f = tape.leaf(Tensor<double>({2, 2, 2}, 0.5));
    Tensor<double> mask({2, 2, 2}, std::vector<double>{0, 0, 0, 0, 1, 1, 1, 1});
    Var y = sum(tape, mul(tape, f, tape.constant(mask)));
    CHECK(per_class_weight(tape, y, f, 1) == 1.0);
    CHECK(per_class_weight(tape, y, f, 0) == 0.0);
  }
  SUBCASE("y = 3 f_k[0,0] gives 3/4") {
    Tape<double> tape;
    Var f = tape.leaf(Tensor<double>({1, 1, 2, 2}, 0.2));
    Tensor<double> mask({1, 1, 2, 2}, std::vector<double>{3, 0, 0, 0});
    Var y = sum(tape, mul(tape, f, tape.constant(mask)));
    CHECK(per_class_weight(tape, y, f, 0) == 0.75);
  }
  SUBCASE("y independent of the features gives 0") {
    Tape<double> tape;
    Var f = tape.leaf(Tensor<double>({1, 2, 2}, 0.2));
    Var other = tape.leaf(Tensor<double>({1}, 1.0));
    CHECK(per_class_weight(tape, scale(tape, other, 2.0), f, 0) == 0.0);
  }
  SUBCASE("detached features are a contract error") {
    Tape<double> tape;
    Var f = tape.constant(Tensor<double>({1, 2, 2}, 0.2));
    Var y = sum(tape, f);
    CHECK_THROWS_AS(per_class_weight(tape, y, f, 0), ContractError);
  }
}

TEST_CASE("class averaging: per-class weights 0.2 and 0.4 give 0.3") {
  // With features taken at the last conv, y^c = sum_k A[c,k] mean(f_k) + b_c,
  // so w_k^c = A[c,k] / (MN) for any input.
  TaskNetwork<double> net(two_class_arch(1), 1);
  const FeatureGeometry g = net.geometry();
  const double area = static_cast<double>(g.M * g.N);
  for (Parameter<double>* p : net.parameters())
    if (p->name == "task.fc.weight")
      for (std::size_t k = 0; k < g.K; ++k) {
        p->tensor[k] = 0.2 * area;
        p->tensor[g.K + k] = 0.4 * area;
      }
  net.freeze();
  std::mt19937_64 rng(1);
  const auto W = aggregate_weights(net, fd::random_tensor({5, 3, 8, 8}, rng, 0, 1));
  for (double w : W) CHECK(w == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("per-image weights match finite differences through a conv head") {
  TaskNetwork<double> net(two_class_arch(0), 2);
  net.freeze();
  std::mt19937_64 rng(2);
  const Tensor<double> images = fd::random_tensor({3, 3, 8, 8}, rng, 0, 1);
  const auto analytic = per_image_weights(net, images, 2);
  for (std::size_t b = 0; b < 3; ++b) {
    Tensor<double> one({1, 3, 8, 8}, std::vector<double>(images.data.begin() + b * 192, images.data.begin() + (b + 1) * 192));
    const auto numeric = fd_image_weights(net, one);
    for (std::size_t k = 0; k < numeric.size(); ++k) CHECK(fd::rel_error(analytic[b][k], numeric[k]) < 1e-4);
  }
}

TEST_CASE("per-image weights agree with per_class_weight on a fresh tape") {
  TaskNetwork<double> net(suites::tiny_task_arch(), 3);
  net.freeze();
  std::mt19937_64 rng(3);
  const Tensor<double> image = fd::random_tensor({1, 3, 8, 8}, rng, 0, 1);
  const auto batched = per_image_weights(net, image);
  const FeatureGeometry g = net.geometry();
  const std::size_t C = net.arch().num_classes;
  for (std::size_t k = 0; k < g.K; ++k) {
    double w = 0;
    for (std::size_t c = 0; c < C; ++c) {
      Tape<double> tape;
      Var f = tape.leaf(net.extract_features(image));
      Tensor<double> onehot({1, C}, 0.0);
      onehot[c] = 1;
      Var y = sum(tape, mul(tape, net.head(tape, f), tape.constant(onehot)));
      w += per_class_weight(tape, y, f, k) / static_cast<double>(C);
    }
    CHECK(batched[0][k] == doctest::Approx(w).epsilon(1e-12));
  }
}

TEST_CASE("calibration aggregation") {
  TaskNetwork<double> net(suites::tiny_task_arch(), 4);
  std::mt19937_64 rng(4);
  const Tensor<double> cal = fd::random_tensor({7, 3, 8, 8}, rng, 0, 1);
  CHECK_THROWS_AS(aggregate_weights(net, cal), ContractError);  // not frozen
  net.freeze();
  const auto per_image = per_image_weights(net, cal, 3);
  const auto W = aggregate_weights(net, cal, 3);
  for (std::size_t k = 0; k < W.size(); ++k) {
    double mean = 0;
    for (const auto& w : per_image) mean += w[k] / 7.0;
    CHECK(W[k] == doctest::Approx(mean).epsilon(1e-12));
  }
  CHECK(aggregate_weights(net, cal, 3) == W);
  CHECK(aggregate_weights(net, cal, 7) == aggregate_weights(net, cal, 7));

  Tensor<double> single({1, 3, 8, 8}, std::vector<double>(cal.data.begin(), cal.data.begin() + 192));
  CHECK(aggregate_weights(net, single) == per_image[0]);
}

TEST_CASE("empty calibration set") {
  TaskNetwork<double> net(suites::tiny_task_arch(), 4);
  net.freeze();
  CHECK_THROWS_AS(per_image_weights(net, Tensor<double>()), ConfigError);
}

TEST_CASE("weight mapping examples") {
  CHECK(map_weights(std::vector<double>{0, 0, 0, 0}, 7.0, 4.0) == std::vector<double>{1, 1, 1, 1});
  const auto m = map_weights(std::vector<double>{std::log(2.0), 0.0}, 1.0, 1.0);
  CHECK(m[0] == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(m[1] == doctest::Approx(1.0 / 3).epsilon(1e-15));
  const auto sharp = map_weights(std::vector<double>{0.3, 0.1, 0.2}, 1e4, 5.0);
  CHECK(sharp[0] == doctest::Approx(5.0).epsilon(1e-12));
  for (double w : map_weights(std::vector<double>{-300, 0, 300}, 10.0, 2.0)) CHECK(std::isfinite(w));
}

TEST_CASE("weight mapping algebra over random inputs") {
  const suites::GswAlgebra a = suites::gsw_algebra(1000, 5);
  CHECK(a.worst_sum_rel <= 1e-9);
  CHECK(a.tau0_uniform);
  CHECK(a.shift_invariant);
  CHECK(a.monotone);
}

TEST_CASE("strict monotonicity and positivity for moderate tau") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> W(16);
    for (double& w : W) w = u(rng);
    const auto m = map_weights(W, 1 + 10 * (u(rng) + 1), 16.0);
    for (std::size_t i = 0; i < W.size(); ++i) {
      CHECK(m[i] > 0);
      for (std::size_t j = 0; j < W.size(); ++j)
        if (W[i] > W[j]) CHECK(m[i] > m[j]);
    }
  }
}

TEST_CASE("mapping contracts") {
  const std::vector<double> W = {0.1, 0.2};
  CHECK_THROWS_AS(map_weights(W, 1.0, 0.0), ContractError);
  CHECK_THROWS_AS(map_weights(W, -1.0, 1.0), ContractError);
  CHECK_THROWS_AS(map_weights(std::vector<double>{NAN, 0.0}, 1.0, 1.0), ContractError);
  CHECK_THROWS_AS(map_weights(std::vector<double>{}, 1.0, 1.0), ContractError);
}

TEST_CASE("semantic weights bundle") {
  TaskNetwork<float> net(TaskArch{}, 1);
  net.freeze();
  Tensor<float> cal({4, 3, 32, 32}, 0.4f);
  const SemanticWeights sw = compute_semantic_weights(net, cal, 50.0, 32.0);
  CHECK(sw.size() == 32);
  CHECK(sw.calibration_size == 4);
  double total = 0;
  for (double w : sw.mapped) total += w;
  CHECK(total == doctest::Approx(32.0).epsilon(1e-12));
  const SemanticWeights u = uniform_weights(32);
  CHECK(u.mapped == map_weights(std::vector<double>(32, 0.0), 0.0, 32.0));
}
