#include <doctest.h>

#include "symkernel/core.hpp"
#include "symkernel/error.hpp"
#include "symkernel/toeplitz.hpp"
#include "test_util.hpp"

using namespace symkernel;

namespace {

SymmetricKernelSpec laplacian_spec() {
  SymmetricKernelSpec spec;
  spec.f = StrengthFunction{{4, -1, 4, 4}};
  spec.rho = {1};
  spec.sigma1 = Permutation::from_image({2, 1, 4, 3});
  spec.sigma2 = spec.sigma1;
  spec.mask = Kernel(3, 1);
  const double plus[3][3] = {{0, 1, 0}, {1, 1, 1}, {0, 1, 0}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) spec.mask.at(i, j) = plus[i][j];
  return spec;
}

Kernel kernel_from(const std::vector<std::vector<double>>& rows) {
  Kernel k(static_cast<int>(rows.size()), 1);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j)
      k.at(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return k;
}

const Kernel kToyKernel = kernel_from({{-1, 2, -1}, {-2, 4, -2}, {-1, 2, -1}});

}  // namespace

TEST_SUITE("corecompiler") {

TEST_CASE("compiled Laplacian at n=16 assembles to W(K) with a clean bill") {
  const SymmetricKernelSpec spec = laplacian_spec();
  const CoreProgram program = compile(spec, 16);
  CHECK(program.input_lines() == 256);
  CHECK(program.neurons() == 196);
  CHECK(check_core_constraints(program).empty());
  const Mat assembled = assemble_weight_matrix(program);
  const BlockToeplitz bt = build_block_toeplitz(materialize_2d(spec).slice(0), 16);
  CHECK(assembled == bt.w);
}

TEST_CASE("toy kernel recovers the worked example's types and strengths") {
  const SymmetricKernelSpec spec = decompile(kToyKernel, 4);
  CHECK(materialize_2d(spec) == kToyKernel);

  const CoreProgram program = compile(spec, 4);
  const std::vector<int> expected_g = {1, 2, 1, 2, 3, 4, 3, 4, 1, 2, 1, 2, 3, 4, 3, 4};
  CHECK(program.g == expected_g);

  REQUIRE(program.strengths.size() == 4);
  CHECK(program.strengths[0].table == std::array<int, 4>{-1, -2, 2, 4});
  CHECK(program.strengths[1].table == std::array<int, 4>{-2, -1, 4, 2});
  CHECK(program.strengths[2].table == std::array<int, 4>{2, 4, -1, -2});
  CHECK(program.strengths[3].table == std::array<int, 4>{4, 2, -2, -1});
}

TEST_CASE("l=1 kernel compiles to a scaled identity core") {
  SymmetricKernelSpec spec;
  spec.f = StrengthFunction{{-3, 1, 1, 1}};
  spec.rho = {1};
  spec.mask = Kernel(1, 1, 1.0);
  const CoreProgram program = compile(spec, 5);
  const Mat assembled = assemble_weight_matrix(program);
  for (int r = 0; r < 25; ++r)
    for (int c = 0; c < 25; ++c) CHECK(assembled(r, c) == (r == c ? -3.0 : 0.0));
}

TEST_CASE("all-zero connectivity assembles to the zero matrix") {
  SymmetricKernelSpec spec = laplacian_spec();
  spec.mask = Kernel(3, 1, 0.0);
  const CoreProgram program = compile(spec, 6);
  const Mat assembled = assemble_weight_matrix(program);
  for (double v : assembled.data) CHECK(v == 0.0);
}

TEST_CASE("sufficiency: assemble(compile(spec)) == W(materialize(spec))") {
  DetRng rng(59);
  for (int t = 0; t < 100; ++t) {
    const int l = rng.uniform_int(1, 3);
    const int n = rng.uniform_int(8, 16);
    const SymmetricKernelSpec spec = test::random_ternary_spec(rng, l, 1);
    const CoreProgram program = compile(spec, n);
    const Mat assembled = assemble_weight_matrix(program);
    const BlockToeplitz bt = build_block_toeplitz(materialize_2d(spec).slice(0), n);
    CHECK(assembled == bt.w);
  }
}

TEST_CASE("simulate_core: zero input gives zero output") {
  const CoreProgram program = compile(laplacian_spec(), 8);
  const std::vector<double> out = simulate_core(program, Mat(8, 8, 0.0));
  for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("simulate_core matches the direct convolution oracle") {
  DetRng rng(61);
  const SymmetricKernelSpec spec = laplacian_spec();
  const CoreProgram program = compile(spec, 16);
  const Kernel k = materialize_2d(spec);
  for (int t = 0; t < 20; ++t) {
    const Mat x = test::random_int_mat(rng, 16, 16, -9, 9);
    const std::vector<double> out = simulate_core(program, x);
    CHECK(out == vectorize(conv2d_valid(x, k.slice(0), 1)));
  }
}

TEST_CASE("parallel and serial core simulation agree bitwise") {
  DetRng rng(67);
  const SymmetricKernelSpec spec = test::random_ternary_spec(rng, 3, 1);
  const CoreProgram program = compile(spec, 12);
  const Mat x = test::random_int_mat(rng, 12, 12, -9, 9);
  CHECK(simulate_core(program, x) == simulate_core_serial(program, {x}));
}

TEST_CASE("single-tap response reads the kernel center") {
  DetRng rng(71);
  const SymmetricKernelSpec spec = test::random_decompilable_spec(rng, 3);
  const Kernel k = materialize_2d(spec);
  const int n = 6, nout = 4;
  const CoreProgram program = compile(spec, n);
  for (int lc = 1; lc <= nout; ++lc)
    for (int kr = 1; kr <= nout; ++kr) {
      Mat x(n, n, 0.0);
      x(kr, lc) = 1.0;  // 0-based (kr+1, lc+1) in 1-based terms
      const std::vector<double> out = simulate_core(program, x);
      CHECK(out[(lc - 1) * nout + (kr - 1)] == k.at(1, 1));
    }
}

TEST_CASE("3-D kernels compile slice-wise and sum at the neuron") {
  DetRng rng(73);
  const int n = 8, m = 2;
  SymmetricKernelSpec spec = test::random_ternary_spec(rng, 3, m);
  const CoreProgram program = compile(spec, n);
  CHECK(program.input_lines() == m * n * n);
  const Kernel k = materialize_3d(spec);
  for (int t = 0; t < 10; ++t) {
    std::vector<Mat> x;
    for (int s = 0; s < m; ++s) x.push_back(test::random_int_mat(rng, n, n, -5, 5));
    const std::vector<double> out = simulate_core(program, x);
    std::vector<double> expected(program.neurons(), 0.0);
    for (int s = 0; s < m; ++s) {
      const std::vector<double> part = vectorize(conv2d_valid(x[s], k.slice(s), 1));
      for (std::size_t q = 0; q < part.size(); ++q) expected[q] += part[q];
    }
    CHECK(out == expected);
  }
}

TEST_CASE("capacity violations are rejected at compile time") {
  DetRng rng(79);
  const SymmetricKernelSpec spec = test::random_ternary_spec(rng, 3, 1);
  CHECK_THROWS_AS(compile(spec, 17), Error);  // 289 input lines
  SymmetricKernelSpec wide = test::random_ternary_spec(rng, 3, 3);
  CHECK_THROWS_AS(compile(wide, 10), Error);  // 300 input lines
}

TEST_CASE("check_core_constraints reports each violation") {
  const CoreProgram good = compile(laplacian_spec(), 16);
  CHECK(check_core_constraints(good).empty());

  CoreProgram too_big = good;
  too_big.n = 17;
  too_big.g.assign(17 * 17, 1);
  too_big.connectivity.assign(static_cast<std::size_t>(17 * 17) * too_big.neurons(), 0);
  too_big.strengths.assign(too_big.neurons(), StrengthFunction{{1, 1, 1, 1}});
  const auto diags = check_core_constraints(too_big);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].find("289") != std::string::npos);

  CoreProgram bad_strength = good;
  bad_strength.strengths[5].table[2] = 300;
  CHECK(check_core_constraints(bad_strength).size() == 1);

  CoreProgram bad_type = good;
  bad_type.g[10] = 5;
  CHECK(check_core_constraints(bad_type).size() == 1);
}

TEST_CASE("necessity round trip over eligible kernels") {
  DetRng rng(83);
  for (int t = 0; t < 100; ++t) {
    const SymmetricKernelSpec spec = test::random_decompilable_spec(rng, 3);
    const Kernel k = materialize_2d(spec);
    const int n = rng.uniform_int(4, 16);
    const SymmetricKernelSpec recovered = decompile(k, n);
    CHECK(materialize_2d(recovered) == k);
  }
}

TEST_CASE("necessity round trip holds at l=2 through the search fallback") {
  // 2x2 windows can leave the coloring underdetermined; decompile must still
  // recover eligible kernels.
  const Kernel plain = kernel_from({{1, 2}, {3, 4}});
  for (int n = 3; n <= 8; ++n) CHECK(materialize_2d(decompile(plain, n)) == plain);

  DetRng rng(97);
  for (int t = 0; t < 50; ++t) {
    const SymmetricKernelSpec spec = test::random_decompilable_spec(rng, 2);
    const Kernel k = materialize_2d(spec);
    const int n = rng.uniform_int(3, 10);
    CHECK(materialize_2d(decompile(k, n)) == k);
  }
}

TEST_CASE("decompile rejects kernels outside its hypotheses") {
  // nine distinct values: more values than strength-table slots
  const Kernel nine = kernel_from({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  CHECK_THROWS_AS(decompile(nine, 4), NotRepresentableError);

  // zeros present: hypothesis violation
  const Kernel zeros = kernel_from({{0, 1, 2}, {3, 4, 1}, {2, 3, 4}});
  CHECK_THROWS_AS(decompile(zeros, 4), Error);

  // fewer than four distinct entries
  const Kernel flat = kernel_from({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}});
  CHECK_THROWS_AS(decompile(flat, 4), Error);
}

TEST_CASE("a non-symmetric four-valued kernel produces a conflict report") {
  const Kernel crafted = kernel_from({{1, 2, 3}, {2, 1, 4}, {3, 2, 1}});
  CHECK_FALSE(is_symmetric_kernel(crafted).has_value());
  try {
    decompile(crafted, 4);
    FAIL("expected a not-representable error");
  } catch (const NotRepresentableError& e) {
    CHECK(e.conflict().col >= 0);
    CHECK(e.conflict().row_a >= 0);
    CHECK(e.conflict().row_b > e.conflict().row_a);
  }
}

TEST_CASE("greedy coloring matches the type matrix up to relabeling") {
  DetRng rng(89);
  for (int t = 0; t < 25; ++t) {
    const SymmetricKernelSpec spec = test::random_decompilable_spec(rng, 3);
    const int n = 6;
    const Kernel k = materialize_2d(spec);
    const BlockToeplitz bt = build_block_toeplitz(k.slice(0), n);
    const Coloring coloring = greedy_color(bt.w, n, 3);
    REQUIRE_FALSE(coloring.conflict.has_value());
    CHECK(coloring.colors_used <= 4);
    // partition equality with G: rows (j-1)*n+(i-1) carry cell (i,j)
    const std::vector<int> labels = orbit_labels(spec.sigma1, spec.sigma2, spec.rho[0], n);
    for (int a = 0; a < n * n; ++a)
      for (int b = 0; b < n * n; ++b) {
        const int cell_a = (a % n) * n + a / n;  // row-major index of (i,j)
        const int cell_b = (b % n) * n + b / n;
        CHECK((coloring.colors[a] == coloring.colors[b]) ==
              (labels[cell_a] == labels[cell_b]));
      }
  }
}

TEST_CASE("uniform kernel is trivially one-colorable") {
  const Kernel ones = kernel_from({{1, 1}, {1, 1}});
  const BlockToeplitz bt = build_block_toeplitz(ones.slice(0), 4);
  const Coloring coloring = greedy_color(bt.w, 4, 2);
  CHECK_FALSE(coloring.conflict.has_value());
  CHECK(coloring.colors_used == 1);
}

}  // TEST_SUITE
