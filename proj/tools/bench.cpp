// Timing comparison between the OpenMP kernels and their serial references.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <omp.h>

#include "symkernel/core.hpp"
#include "symkernel/dataset.hpp"
#include "symkernel/detrng.hpp"
#include "symkernel/projection.hpp"
#include "symkernel/trainer.hpp"

using namespace symkernel;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

Kernel random_kernel(int l, int m, DetRng& rng) {
  Kernel k(l, m);
  for (double& v : k.values) v = rng.uniform(-1.0, 1.0);
  return k;
}

SymmetricKernelSpec random_spec(int l, DetRng& rng) {
  const auto& pairs = enumerate_commuting_pairs();
  const auto& [s1, s2] = pairs[rng.uniform_int(0, static_cast<int>(pairs.size()) - 1)];
  StrengthFunction f;
  for (int i = 0; i < 4; ++i) f.table[i] = rng.uniform_int(0, 1) ? 1 : -1;
  Kernel mask(l, 1);
  for (double& v : mask.values) v = rng.uniform_int(0, 1);
  return SymmetricKernelSpec{f, {rng.uniform_int(1, 4)}, s1, s2, mask};
}

}  // namespace

int main(int argc, char** argv) {
  int reps = 20;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--reps" && i + 1 < argc) reps = std::atoi(argv[++i]);
  }
  std::printf("threads: %d, reps: %d\n", omp_get_max_threads(), reps);

  DetRng rng(42);

  {
    std::vector<Kernel> kernels;
    for (int r = 0; r < reps; ++r) kernels.push_back(random_kernel(3, 8, rng));
    std::vector<double> serial_d(reps), parallel_d(reps);
    auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r)
      serial_d[r] = project_exact_serial(kernels[r], ternary_tables()).distance;
    const double serial = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) parallel_d[r] = project_exact(kernels[r]).distance;
    const double parallel = ms_since(t0);
    double max_diff = 0.0;
    for (int r = 0; r < reps; ++r)
      max_diff = std::max(max_diff, std::abs(serial_d[r] - parallel_d[r]));
    std::printf("project_exact 3x3x8   serial %8.2f ms   omp %8.2f ms   speedup %.2fx"
                "   max |serial-omp| %.1e\n",
                serial, parallel, serial / parallel, max_diff);
  }

  {
    DetRng xr(7);
    const SymmetricKernelSpec spec = random_spec(3, rng);
    const CoreProgram program = compile(spec, 16);
    Mat x(16, 16);
    for (double& v : x.data) v = xr.uniform_int(-8, 8);
    const std::vector<Mat> slices{x};
    const int inner = reps * 50;
    std::vector<double> serial_d(inner), parallel_d(inner);
    auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < inner; ++r)
      serial_d[r] = simulate_core_serial(program, slices)[r % 196];
    const double serial = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < inner; ++r)
      parallel_d[r] = simulate_core(program, slices)[r % 196];
    const double parallel = ms_since(t0);
    double max_diff = 0.0;
    for (int r = 0; r < inner; ++r)
      max_diff = std::max(max_diff, std::abs(serial_d[r] - parallel_d[r]));
    std::printf("simulate_core n=16    serial %8.2f ms   omp %8.2f ms   speedup %.2fx"
                "   max |serial-omp| %.1e\n",
                serial, parallel, serial / parallel, max_diff);
  }

  {
    // The trainer's batch passes share one code path; one thread is the
    // serial reference. The reductions are thread-count independent, so the
    // metrics must agree byte for byte.
    const Dataset data = make_synthetic_two_class(256, 9);
    NetworkSpec spec;
    spec.in_h = 8;
    spec.in_w = 8;
    spec.in_c = 1;
    spec.num_classes = 2;
    spec.layers.push_back(LayerSpec{3, 1, 1, 8, 1});
    spec.layers.push_back(LayerSpec{3, 1, 8, 8, 1});
    Hyperparameters hp;
    hp.learning_rate = 0.2;
    hp.batch_size = 16;
    hp.seed = 3;
    ReplacementPlan plan;
    plan.warmup_epochs = std::max(1, reps / 4);
    plan.stage_limit = 1;
    const int max_threads = omp_get_max_threads();
    omp_set_num_threads(1);
    auto t0 = std::chrono::steady_clock::now();
    const TrainResult serial_run = train(spec, data, hp, plan);
    const double serial = ms_since(t0);
    omp_set_num_threads(max_threads);
    t0 = std::chrono::steady_clock::now();
    const TrainResult parallel_run = train(spec, data, hp, plan);
    const double parallel = ms_since(t0);
    const bool identical =
        serial_run.metrics.back().loss == parallel_run.metrics.back().loss &&
        serial_run.metrics.back().accuracy == parallel_run.metrics.back().accuracy;
    std::printf("train warmup epochs   1 thr  %8.2f ms   omp %8.2f ms   speedup %.2fx"
                "   metrics identical: %s\n",
                serial, parallel, serial / parallel, identical ? "yes" : "NO");
  }
  return 0;
}
