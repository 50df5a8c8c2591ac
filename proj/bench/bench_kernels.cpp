// Times the serial reference convolution against the OpenMP kernels on the
// codec's layer shapes and checks they agree.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "sdjscc/kernels.hpp"

using namespace sdjscc::kernels;

namespace {

template <typename F>
double best_ms(F&& f, int reps) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

float max_diff(const std::vector<float>& a, const std::vector<float>& b) {
  float d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 5;
  const int threads = configure_threads(0);
  std::printf("threads: %d\n", threads);
  std::printf("%-28s %10s %10s %10s %10s %10s %10s %9s\n", "layer", "fwd_ref", "fwd_omp", "bwdx_ref", "bwdx_omp",
              "bwdw_ref", "bwdw_omp", "max_diff");
  struct Case {
    const char* name;
    ConvGeometry g;
  };
  const Case cases[] = {
      {"enc.in 3->32 32x32 s2", {32, 3, 32, 32, 32, 3, 3, 2, 1}},
      {"res 32->32 16x16", {32, 32, 16, 16, 32, 3, 3, 1, 1}},
      {"enc.down 32->32 16x16 s2", {32, 32, 16, 16, 32, 3, 3, 2, 1}},
      {"dec.out 32->3 32x32", {32, 32, 32, 32, 3, 3, 3, 1, 1}},
  };
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<float> u(-1.f, 1.f);
  for (const Case& c : cases) {
    const ConvGeometry& g = c.g;
    std::vector<float> x(g.input_size()), w(g.weight_size()), b(g.out_channels), go(g.output_size());
    for (auto* v : {&x, &w, &b, &go})
      for (float& e : *v) e = u(rng);
    std::vector<float> y_ref(g.output_size()), y_omp(g.output_size());
    std::vector<float> gx_ref(g.input_size()), gx_omp(g.input_size());
    std::vector<float> gw_ref(g.weight_size()), gw_omp(g.weight_size()), gb_ref(g.out_channels), gb_omp(g.out_channels);
    const double f_ref = best_ms([&] { reference::conv2d_forward<float>(g, x, w, b, y_ref); }, reps);
    const double f_omp = best_ms([&] { conv2d_forward<float>(g, x, w, b, y_omp); }, reps);
    const double x_ref = best_ms([&] {
      std::fill(gx_ref.begin(), gx_ref.end(), 0.f);
      reference::conv2d_backward_input<float>(g, go, w, gx_ref);
    }, reps);
    const double x_omp = best_ms([&] {
      std::fill(gx_omp.begin(), gx_omp.end(), 0.f);
      conv2d_backward_input<float>(g, go, w, gx_omp);
    }, reps);
    const double w_ref = best_ms([&] {
      std::fill(gw_ref.begin(), gw_ref.end(), 0.f);
      std::fill(gb_ref.begin(), gb_ref.end(), 0.f);
      reference::conv2d_backward_weight<float>(g, go, x, gw_ref, gb_ref);
    }, reps);
    const double w_omp = best_ms([&] {
      std::fill(gw_omp.begin(), gw_omp.end(), 0.f);
      std::fill(gb_omp.begin(), gb_omp.end(), 0.f);
      conv2d_backward_weight<float>(g, go, x, gw_omp, gb_omp);
    }, reps);
    const float diff = std::max({max_diff(y_ref, y_omp), max_diff(gx_ref, gx_omp), max_diff(gw_ref, gw_omp)});
    std::printf("%-28s %10.3f %10.3f %10.3f %10.3f %10.3f %10.3f %9.2e\n", c.name, f_ref, f_omp, x_ref, x_omp, w_ref,
                w_omp, static_cast<double>(diff));
  }
  return 0;
}
