#include <doctest.h>

#include <cmath>

#include "symkernel/error.hpp"
#include "symkernel/projection.hpp"
#include "test_util.hpp"

using namespace symkernel;

namespace {

// Independent oracle: exhaustive joint enumeration over all
// (pair, f, rho-vector) tuples; per-entry mask optimum evaluated from the
// definition by comparing the three stationary candidates.
double oracle_distance(const Kernel& k) {
  double best = -1.0;
  std::vector<int> rho(k.feats, 1);
  for (const auto& [s1, s2] : enumerate_commuting_pairs()) {
    for (const StrengthFunction& f : ternary_tables()) {
      // iterate all 4^m seed vectors
      std::fill(rho.begin(), rho.end(), 1);
      while (true) {
        double cost = 0.0;
        for (int s = 0; s < k.feats; ++s)
          for (int i = 0; i < k.side; ++i)
            for (int j = 0; j < k.side; ++j) {
              const int label = power(s1, i)(power(s2, j)(rho[s]));
              const double p = f(label);
              const double v = k.at(i, j, s);
              double c = std::min(v * v, (v - p) * (v - p));
              if (p != 0.0) {
                const double q = v / p;
                if (q > 0.0 && q < 1.0) c = std::min(c, (v - q * p) * (v - q * p));
              }
              cost += c;
            }
        if (best < 0.0 || cost < best) best = cost;
        int pos = 0;
        while (pos < k.feats && rho[pos] == 4) rho[pos++] = 1;
        if (pos == k.feats) break;
        ++rho[pos];
      }
    }
  }
  return std::sqrt(best);
}

}  // namespace

TEST_SUITE("projection") {

TEST_CASE("optimal_mask solves the boxed elementwise quadratic") {
  Kernel k(2, 1), pattern(2, 1);
  k.at(0, 0) = 1.0;   pattern.at(0, 0) = 1.0;   // exact: b = 1
  k.at(0, 1) = 0.5;   pattern.at(0, 1) = 1.0;   // interior: b = 0.5
  k.at(1, 0) = -0.3;  pattern.at(1, 0) = 1.0;   // clamped low: b = 0
  k.at(1, 1) = 3.0;   pattern.at(1, 1) = 2.0;   // clamped high: b = 1
  const Kernel b = optimal_mask(k, pattern);
  CHECK(b.at(0, 0) == 1.0);
  CHECK(b.at(0, 1) == 0.5);
  CHECK(b.at(1, 0) == 0.0);
  CHECK(b.at(1, 1) == 1.0);
}

TEST_CASE("projecting a materialized symmetric kernel is idempotent") {
  DetRng rng(101);
  for (int t = 0; t < 50; ++t) {
    const int m = rng.uniform_int(1, 3);
    const SymmetricKernelSpec spec = test::random_ternary_spec(rng, 3, m);
    const ProjectionResult r = project_exact(materialize(spec));
    CHECK(r.distance < 1e-12);
  }
}

TEST_CASE("exact projection matches the joint brute-force oracle") {
  DetRng rng(103);
  for (int t = 0; t < 51; ++t) {
    const int m = 1 + t % 3;
    const Kernel k = test::random_real_kernel(rng, 3, m, -1.5, 1.5);
    const ProjectionResult r = project_exact(k);
    CHECK(std::abs(r.distance - oracle_distance(k)) <= 1e-10);
    CHECK(r.candidates_examined == 120LL * 16 * 4 * m);
  }
}

TEST_CASE("serial and parallel scans pick the identical candidate") {
  DetRng rng(107);
  for (int t = 0; t < 10; ++t) {
    const Kernel k = test::random_real_kernel(rng, 3, 2, -1.0, 1.0);
    const ProjectionResult a = project_exact(k);
    const ProjectionResult b = project_exact_serial(k, ternary_tables());
    CHECK(a.distance == b.distance);
    CHECK(a.spec.f == b.spec.f);
    CHECK(a.spec.rho == b.spec.rho);
    CHECK(a.spec.sigma1 == b.spec.sigma1);
    CHECK(a.spec.sigma2 == b.spec.sigma2);
    CHECK(a.spec.mask == b.spec.mask);
  }
}

TEST_CASE("all-0.5 tensor: mask follows the pattern sign") {
  Kernel k(3, 2, 0.5);
  const ProjectionResult r = project_exact(k);
  for (int s = 0; s < 2; ++s) {
    const std::vector<int> labels =
        orbit_labels(r.spec.sigma1, r.spec.sigma2, r.spec.rho[s], 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int p = r.spec.f(labels[i * 3 + j]);
        CHECK(r.spec.mask.at(i, j, s) == (p == 1 ? 0.5 : 0.0));
      }
  }
}

TEST_CASE("reported distance is self-consistent with the returned spec") {
  DetRng rng(109);
  for (int t = 0; t < 20; ++t) {
    const Kernel k = test::random_real_kernel(rng, 3, 2, -2.0, 2.0);
    const ProjectionResult r = project_exact(k);
    CHECK(std::abs(r.distance - frobenius_distance(k, materialize(r.spec))) < 1e-12);
    if (r.distance == 0.0) CHECK(materialize(r.spec) == k);
  }
}

TEST_CASE("scale covariance when no upper clamp is active") {
  DetRng rng(113);
  for (int t = 0; t < 20; ++t) {
    const Kernel k = test::random_real_kernel(rng, 3, 1, -1.0, 1.0);
    const double base = project_exact(k).distance;
    for (double c : {0.25, 0.5}) {
      Kernel scaled = k;
      for (double& v : scaled.values) v *= c;
      CHECK(std::abs(project_exact(scaled).distance - c * base) < 1e-12);
    }
  }
}

TEST_CASE("empty strength-function set is rejected") {
  CHECK_THROWS_AS(project_exact(Kernel(3, 1, 0.5), {}), Error);
}

TEST_CASE("alternating search hits zero on symmetric 2-D inputs at iteration 1") {
  DetRng rng(127);
  for (int t = 0; t < 25; ++t) {
    const SymmetricKernelSpec spec = test::random_ternary_spec(rng, 3, 1);
    const ProjectionResult r =
        project_alternating(materialize(spec), ternary_tables(), 10, 1000 + t);
    REQUIRE_FALSE(r.iteration_distances.empty());
    CHECK(r.iteration_distances.front() < 1e-12);
    CHECK(r.distance < 1e-12);
  }
}

TEST_CASE("alternating distances are monotone and bounded by the exact optimum") {
  DetRng rng(131);
  for (int t = 0; t < 100; ++t) {
    const int m = 1 + t % 3;
    const Kernel k = test::random_real_kernel(rng, 3, m, -1.2, 1.2);
    const ProjectionResult alt = project_alternating(k, ternary_tables(), 12, t);
    for (std::size_t i = 1; i < alt.iteration_distances.size(); ++i)
      CHECK(alt.iteration_distances[i] <= alt.iteration_distances[i - 1] + 1e-12);
    const ProjectionResult exact = project_exact(k);
    CHECK(alt.distance >= exact.distance - 1e-9);
  }
}

TEST_CASE("binarize_mask") {
  Kernel b(1, 2);
  b.values = {0.2, 0.7};
  const Kernel snapped = binarize_mask(b, 0.5);
  CHECK(snapped.values == std::vector<double>{0.0, 1.0});

  Kernel already(2, 1);
  already.values = {0.0, 1.0, 1.0, 0.0};
  for (double thr : {0.1, 0.5, 1.0})
    CHECK(binarize_mask(already, thr) == already);

  CHECK_THROWS_AS(binarize_mask(Kernel(1, 1, 1.5), 0.5), Error);
}

TEST_CASE("snapping the mask never reduces the residual") {
  DetRng rng(137);
  for (int t = 0; t < 25; ++t) {
    const Kernel k = test::random_real_kernel(rng, 3, 1, -1.0, 1.0);
    const ProjectionResult r = project_exact(k);
    SymmetricKernelSpec snapped = r.spec;
    snapped.mask = binarize_mask(snapped.mask, 0.5);
    const double after = frobenius_distance(k, materialize(snapped));
    CHECK(after >= r.distance - 1e-12);
  }
}

}  // TEST_SUITE
