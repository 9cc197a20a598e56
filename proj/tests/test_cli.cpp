#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "symkernel/cli.hpp"
#include "symkernel/json_io.hpp"
#include "symkernel/toeplitz.hpp"
#include "test_util.hpp"

using namespace symkernel;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("cli_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
  void write(const std::string& text) const {
    std::ofstream out(path);
    out << text;
  }
  std::string read() const {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

const char* kLaplacianSpec =
    R"({"f":[4,-1,4,4],"rho":[1],"sigma1":[2,1,4,3],"sigma2":[2,1,4,3],)"
    R"("B":[[0,1,0],[1,1,1],[0,1,0]]})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("enumerate --pairs prints the 120 commuting pairs") {
  TempFile out("pairs.json");
  REQUIRE(run_cli({"enumerate", "--pairs", "-o", out.path}) == 0);
  const json j = json::parse(out.read());
  CHECK(j["count"] == 120);
  REQUIRE(j["pairs"].size() == 120);
  for (const json& pair : j["pairs"]) {
    const Permutation p = permutation_from_json(pair[0]);
    const Permutation q = permutation_from_json(pair[1]);
    CHECK(commutes(p, q));
  }

  REQUIRE(run_cli({"enumerate", "-o", out.path}) == 0);
  const json je = json::parse(out.read());
  CHECK(je["count"] == 24);
  CHECK(je["permutations"].size() == 24);
}

TEST_CASE("decompile-compile golden program for the worked 4x4 example") {
  TempFile kern("toy_kernel.json"), spec("toy_spec.json"), prog("toy_prog.json");
  kern.write("[[-1,2,-1],[-2,4,-2],[-1,2,-1]]");
  REQUIRE(run_cli({"decompile", "--kernel", kern.path, "--n", "4", "-o", spec.path}) == 0);
  REQUIRE(run_cli({"compile", "--spec", spec.path, "--n", "4", "-o", prog.path}) == 0);
  const json j = json::parse(prog.read());
  CHECK(j["g"] == json::parse("[1,2,1,2,3,4,3,4,1,2,1,2,3,4,3,4]"));
  CHECK(j["strengths"] ==
        json::parse("[[-1,-2,2,4],[-2,-1,4,2],[2,4,-1,-2],[4,2,-2,-1]]"));
}

TEST_CASE("compile then simulate agrees with conv end to end") {
  TempFile spec("lap_spec.json"), prog("lap_prog.json"), input("x.json");
  TempFile kern("lap_kernel.json"), sim_out("sim.json"), conv_out("conv.json");
  spec.write(kLaplacianSpec);
  REQUIRE(run_cli({"compile", "--spec", spec.path, "--n", "16", "-o", prog.path}) == 0);

  DetRng rng(997);
  const Mat x = test::random_int_mat(rng, 16, 16, -9, 9);
  input.write(mat_to_json(x).dump());
  kern.write(kernel_to_json(materialize_2d(spec_from_json(json::parse(kLaplacianSpec))))
                 .dump());

  REQUIRE(run_cli({"simulate", "--program", prog.path, "--input", input.path, "-o",
                   sim_out.path}) == 0);
  REQUIRE(run_cli({"conv", "--kernel", kern.path, "--input", input.path, "-o",
                   conv_out.path}) == 0);
  CHECK(json::parse(sim_out.read()) == json::parse(conv_out.read()));
}

TEST_CASE("check reports membership both ways") {
  TempFile sym("sym_kernel.json"), notsym("notsym_kernel.json"), out("check.json");
  sym.write("[[0,-1,0],[-1,4,-1],[0,-1,0]]");
  REQUIRE(run_cli({"check", "--kernel", sym.path, "-o", out.path}) == 0);
  json j = json::parse(out.read());
  CHECK(j["symmetric"] == true);
  CHECK(j.contains("spec"));

  notsym.write("[[1,2,3],[2,1,4],[3,2,1]]");
  REQUIRE(run_cli({"check", "--kernel", notsym.path, "-o", out.path}) == 0);
  j = json::parse(out.read());
  CHECK(j["symmetric"] == false);
  CHECK(j.contains("conflict"));

  CHECK(run_cli({"check"}) == 2);
}

TEST_CASE("check --program runs the core diagnostics") {
  TempFile spec("chk_spec.json"), prog("chk_prog.json"), out("chk_out.json");
  spec.write(kLaplacianSpec);
  REQUIRE(run_cli({"compile", "--spec", spec.path, "--n", "8", "-o", prog.path}) == 0);
  REQUIRE(run_cli({"check", "--program", prog.path, "-o", out.path}) == 0);
  json j = json::parse(out.read());
  CHECK(j["ok"] == true);
  CHECK(j["diagnostics"].empty());

  json broken = json::parse(prog.read());
  broken["strengths"][0][2] = 300;
  prog.write(broken.dump());
  REQUIRE(run_cli({"check", "--program", prog.path, "-o", out.path}) == 0);
  j = json::parse(out.read());
  CHECK(j["ok"] == false);
  CHECK(j["diagnostics"].size() == 1);
}

TEST_CASE("decompile of an unrepresentable kernel exits with code 5") {
  TempFile nine("nine.json");
  nine.write("[[1,2,3],[4,5,6],[7,8,9]]");
  CHECK(run_cli({"decompile", "--kernel", nine.path, "--n", "4"}) == 5);
}

TEST_CASE("toeplitz dumps W and its structural mask") {
  TempFile kern("toep_kernel.json"), out("toep.json");
  kern.write("[[0,-1,0],[-1,4,-1],[0,-1,0]]");
  REQUIRE(run_cli({"toeplitz", "--kernel", kern.path, "--n", "4", "-o", out.path}) == 0);
  const json j = json::parse(out.read());
  const Mat w = mat_from_json(j["W"]);
  const Mat mask = mat_from_json(j["mask"]);
  CHECK(w.rows == 16);
  CHECK(w.cols == 4);
  CHECK(w(0, 0) == 0.0);    // K11 of the Laplacian
  CHECK(w(1, 0) == -1.0);   // K21
  CHECK(mask(0, 0) == 1.0); // structural slot survives the zero coefficient
  double ones = 0.0;
  for (double v : mask.data) ones += v;
  CHECK(ones == 4 * 9);
}

TEST_CASE("malformed JSON exits with code 3") {
  TempFile bad("bad.json");
  bad.write("{not json");
  CHECK(run_cli({"check", "--kernel", bad.path}) == 3);
}

TEST_CASE("unknown flags exit with code 2") {
  CHECK(run_cli({"enumerate", "--nonsense"}) == 2);
  CHECK(run_cli({"frobnicate"}) == 2);
  CHECK(run_cli({}) == 2);
}

TEST_CASE("capacity violations exit with code 4") {
  TempFile spec("cap_spec.json");
  spec.write(kLaplacianSpec);
  CHECK(run_cli({"compile", "--spec", spec.path, "--n", "17"}) == 4);
}

TEST_CASE("project output is self-consistent and seed-reproducible") {
  TempFile kern("proj_kernel.json"), out_a("a.json"), out_b("b.json");
  DetRng rng(1009);
  kern.write(kernel_to_json(test::random_real_kernel(rng, 3, 2, -1, 1)).dump());

  REQUIRE(run_cli({"project", "--kernel", kern.path, "-o", out_a.path}) == 0);
  const json j = json::parse(out_a.read());
  const SymmetricKernelSpec spec = spec_from_json(j["spec"]);
  const Kernel k = kernel_from_json(json::parse(kern.read()));
  CHECK(std::abs(j["distance"].get<double>() -
                 frobenius_distance(k, materialize(spec))) < 1e-12);
  CHECK(j["candidates_examined"] == 120 * 16 * 4 * 2);

  // identical request + seed => byte-identical output files
  REQUIRE(run_cli({"project", "--kernel", kern.path, "--mode", "alternating",
                   "--iters", "8", "--seed", "3", "-o", out_a.path}) == 0);
  REQUIRE(run_cli({"project", "--kernel", kern.path, "--mode", "alternating",
                   "--iters", "8", "--seed", "3", "-o", out_b.path}) == 0);
  CHECK(out_a.read() == out_b.read());
  CHECK(!out_a.read().empty());
}

TEST_CASE("train / eval / sparsity / estimate-cores round trip") {
  TempFile cfg("train_cfg.json"), metrics("metrics.jsonl"), ckpt("ckpt.json");
  TempFile eval_out("eval.json"), sp_out("sp.json"), cores_out("cores.json");
  cfg.write(R"({
    "dataset": {"kind": "synthetic", "count": 64, "seed": 5},
    "input": {"h": 8, "w": 8, "c": 1},
    "classes": 2,
    "T": 1.0,
    "layers": [{"patch": 3, "stride": 1, "in": 1, "out": 2, "groups": 1}],
    "hyper": {"learning_rate": 0.2, "batch_size": 16, "seed": 11},
    "plan": {"warmup_epochs": 2, "binarize_epochs": 1, "finetune_epochs": 1}
  })");
  REQUIRE(run_cli({"train", "--config", cfg.path, "--metrics", metrics.path,
                   "--checkpoint", ckpt.path}) == 0);
  CHECK(!metrics.read().empty());

  REQUIRE(run_cli({"eval", "--checkpoint", ckpt.path, "--config", cfg.path, "-o",
                   eval_out.path}) == 0);
  const json je = json::parse(eval_out.read());
  CHECK(je["accuracy"].get<double>() >= 0.0);
  CHECK(je["accuracy"].get<double>() <= 1.0);

  REQUIRE(run_cli({"sparsity", "--checkpoint", ckpt.path, "--config", cfg.path, "-o",
                   sp_out.path}) == 0);
  const json js = json::parse(sp_out.read());
  CHECK(js["sparsity"].get<double>() >= 0.0);
  CHECK(js["sparsity"].get<double>() <= 1.0);

  REQUIRE(run_cli({"estimate-cores", "--checkpoint", ckpt.path, "-o", cores_out.path}) ==
          0);
  CHECK(json::parse(cores_out.read())["cores"].get<long long>() > 0);

  // determinism at the file level: rerun and compare bytes
  TempFile metrics2("metrics2.jsonl");
  REQUIRE(run_cli({"train", "--config", cfg.path, "--metrics", metrics2.path}) == 0);
  CHECK(metrics.read() == metrics2.read());
}

TEST_CASE("unconstrained checkpoints round-trip through eval") {
  TempFile cfg("uc_cfg.json"), ckpt("uc_ckpt.json"), out("uc_eval.json");
  cfg.write(R"({
    "dataset": {"kind": "synthetic", "count": 32, "seed": 3},
    "input": {"h": 8, "w": 8, "c": 1},
    "classes": 2,
    "layers": [{"patch": 3, "stride": 1, "in": 1, "out": 2, "groups": 1}],
    "hyper": {"learning_rate": 0.2, "batch_size": 8, "seed": 6},
    "plan": {"warmup_epochs": 3, "stage": 1}
  })");
  REQUIRE(run_cli({"train", "--config", cfg.path, "--metrics", "/dev/null",
                   "--checkpoint", ckpt.path}) == 0);
  const json j = json::parse(ckpt.read());
  CHECK(j["layers"][0]["weight_mode"] == "unconstrained");
  REQUIRE(run_cli({"eval", "--checkpoint", ckpt.path, "--config", cfg.path, "-o",
                   out.path}) == 0);
  CHECK(json::parse(out.read())["accuracy"].get<double>() >= 0.5);

  // sparsity refuses a network that is not fully threshold-mode
  CHECK(run_cli({"sparsity", "--checkpoint", ckpt.path, "--config", cfg.path}) == 4);
  // core estimation refuses unconstrained layers
  CHECK(run_cli({"estimate-cores", "--checkpoint", ckpt.path}) == 4);
}

TEST_CASE("train consumes CIFAR-10 batches named in the config") {
  TempFile batch("fake_cifar.bin"), cfg("cifar_cfg.json"), metrics("cifar_metrics.jsonl");
  {
    std::ofstream out(batch.path, std::ios::binary);
    DetRng rng(4242);
    for (int rec = 0; rec < 12; ++rec) {
      out.put(static_cast<char>(rec % 10));
      for (int p = 0; p < 3072; ++p)
        out.put(static_cast<char>(rng.uniform_int(0, 255)));
    }
  }
  cfg.write(R"({
    "dataset": {"kind": "cifar10", "files": [")" + batch.path + R"("], "limit": 12},
    "input": {"h": 32, "w": 32, "c": 3},
    "classes": 10,
    "layers": [{"patch": 3, "stride": 2, "in": 3, "out": 10, "groups": 1}],
    "hyper": {"learning_rate": 0.05, "batch_size": 4, "seed": 2},
    "plan": {"warmup_epochs": 1, "stage": 1}
  })");
  REQUIRE(run_cli({"train", "--config", cfg.path, "--metrics", metrics.path}) == 0);
  CHECK(!metrics.read().empty());
}

}  // TEST_SUITE
