#include "symkernel/cli.hpp"

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "symkernel/json_io.hpp"
#include "symkernel/toeplitz.hpp"

namespace symkernel {

namespace {

void emit(const json& j, const std::string& out_path, bool pretty) {
  if (out_path.empty())
    std::cout << dump_json(j, pretty) << "\n";
  else
    save_json_file(out_path, j, pretty);
}

// Resolved-configuration echo; goes to stderr so stdout stays machine-clean.
void echo_request(const std::string& command, const json& args) {
  json j;
  j["command"] = command;
  j["args"] = args;
  std::cerr << j.dump() << "\n";
}

json error_object(const Error& e) {
  json j;
  j["error"] = {{"code", e.code_name()}, {"message", e.what()}};
  return j;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"symmetric-kernel toolkit: generate, recognize, compile, project "
               "and train symmetric convolution kernels"};
  app.require_subcommand(1);
  bool pretty = false;
  app.add_flag("--pretty", pretty, "indent JSON output");

  // enumerate
  auto* cmd_enum = app.add_subcommand("enumerate", "list S4 elements or commuting pairs");
  bool enum_pairs = false;
  std::string enum_out;
  cmd_enum->add_flag("--pairs", enum_pairs, "ordered commuting pairs instead of elements");
  cmd_enum->add_option("-o,--output", enum_out, "output file (default stdout)");

  // check
  auto* cmd_check =
      app.add_subcommand("check", "kernel membership test or core-program diagnostics");
  std::string check_kernel, check_program, check_out;
  auto* check_kernel_opt = cmd_check->add_option("--kernel", check_kernel, "kernel JSON file");
  cmd_check->add_option("--program", check_program, "core program JSON file")
      ->excludes(check_kernel_opt);
  cmd_check->add_option("-o,--output", check_out, "output file");

  // compile
  auto* cmd_compile = app.add_subcommand("compile", "lower a spec to a core program");
  std::string compile_spec, compile_out;
  int compile_n = 16;
  cmd_compile->add_option("--spec", compile_spec, "spec JSON file")->required();
  cmd_compile->add_option("--n", compile_n, "input side length")->required();
  cmd_compile->add_option("-o,--output", compile_out, "output file");

  // decompile
  auto* cmd_decompile = app.add_subcommand("decompile", "recover a spec from a kernel");
  std::string decompile_kernel, decompile_out;
  int decompile_n = 16;
  cmd_decompile->add_option("--kernel", decompile_kernel, "kernel JSON file")->required();
  cmd_decompile->add_option("--n", decompile_n, "input side length")->required();
  cmd_decompile->add_option("-o,--output", decompile_out, "output file");

  // simulate
  auto* cmd_sim = app.add_subcommand("simulate", "run a core program on an input");
  std::string sim_program, sim_input, sim_out;
  cmd_sim->add_option("--program", sim_program, "core program JSON file")->required();
  cmd_sim->add_option("--input", sim_input, "input matrix JSON file")->required();
  cmd_sim->add_option("-o,--output", sim_out, "output file");

  // conv
  auto* cmd_conv = app.add_subcommand("conv", "reference 2-D valid convolution");
  std::string conv_kernel, conv_input, conv_out;
  int conv_stride = 1;
  cmd_conv->add_option("--kernel", conv_kernel, "kernel JSON file")->required();
  cmd_conv->add_option("--input", conv_input, "input matrix JSON file")->required();
  cmd_conv->add_option("--stride", conv_stride, "stride (default 1)");
  cmd_conv->add_option("-o,--output", conv_out, "output file");

  // toeplitz
  auto* cmd_toep = app.add_subcommand("toeplitz", "dump W(K) and its structural mask");
  std::string toep_kernel, toep_out;
  int toep_n = 16;
  cmd_toep->add_option("--kernel", toep_kernel, "kernel JSON file")->required();
  cmd_toep->add_option("--n", toep_n, "input side length")->required();
  cmd_toep->add_option("-o,--output", toep_out, "output file");

  // project
  auto* cmd_project = app.add_subcommand("project", "nearest symmetric kernel");
  std::string project_kernel, project_mode = "exact", project_out;
  int project_iters = 25;
  std::uint64_t project_seed = 1;
  double project_threshold = -1.0;
  cmd_project->add_option("--kernel", project_kernel, "kernel JSON file")->required();
  cmd_project->add_option("--mode", project_mode, "exact | alternating")
      ->check(CLI::IsMember({"exact", "alternating"}));
  cmd_project->add_option("--iters", project_iters, "alternating iterations");
  cmd_project->add_option("--seed", project_seed, "alternating start seed");
  cmd_project->add_option("--threshold", project_threshold,
                          "also report the mask snapped at this threshold");
  cmd_project->add_option("-o,--output", project_out, "output file");

  // train
  auto* cmd_train = app.add_subcommand("train", "staged training pipeline");
  std::string train_config, train_metrics, train_checkpoint;
  int train_epochs = -1, train_stage = -1;
  std::uint64_t train_seed = 0;
  cmd_train->add_option("--config", train_config, "training config JSON")->required();
  auto* train_seed_opt = cmd_train->add_option("--seed", train_seed, "override config seed");
  cmd_train->add_option("--epochs", train_epochs, "override warmup epochs");
  cmd_train->add_option("--stage", train_stage, "run pipeline through stage 1..4");
  cmd_train->add_option("--metrics", train_metrics, "metrics JSONL file");
  cmd_train->add_option("--checkpoint", train_checkpoint, "checkpoint JSON file");

  // eval
  auto* cmd_eval = app.add_subcommand("eval", "accuracy of a checkpoint");
  std::string eval_checkpoint, eval_config, eval_out;
  cmd_eval->add_option("--checkpoint", eval_checkpoint, "checkpoint JSON")->required();
  cmd_eval->add_option("--config", eval_config, "config JSON providing the dataset")
      ->required();
  cmd_eval->add_option("-o,--output", eval_out, "output file");

  // sparsity
  auto* cmd_sparsity = app.add_subcommand("sparsity", "activation sparsity of a checkpoint");
  std::string sp_checkpoint, sp_config, sp_out;
  cmd_sparsity->add_option("--checkpoint", sp_checkpoint, "checkpoint JSON")->required();
  cmd_sparsity->add_option("--config", sp_config, "config JSON providing the dataset")
      ->required();
  cmd_sparsity->add_option("-o,--output", sp_out, "output file");

  // estimate-cores
  auto* cmd_cores = app.add_subcommand("estimate-cores", "core-count estimate");
  std::string cores_checkpoint, cores_out;
  cmd_cores->add_option("--checkpoint", cores_checkpoint, "checkpoint JSON")->required();
  cmd_cores->add_option("-o,--output", cores_out, "output file");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    Error err(ErrorCode::usage, e.what());
    std::cerr << error_object(err).dump() << "\n";
    return static_cast<int>(ErrorCode::usage);
  }

  try {
    if (*cmd_enum) {
      echo_request("enumerate", {{"pairs", enum_pairs}});
      json out;
      if (enum_pairs) {
        json pairs = json::array();
        for (const auto& [p, q] : enumerate_commuting_pairs())
          pairs.push_back({permutation_to_json(p), permutation_to_json(q)});
        out["count"] = pairs.size();
        out["pairs"] = pairs;
      } else {
        json perms = json::array();
        for (const Permutation& p : all_permutations())
          perms.push_back(permutation_to_json(p));
        out["count"] = perms.size();
        out["permutations"] = perms;
      }
      emit(out, enum_out, pretty);
    } else if (*cmd_check) {
      if (!check_program.empty()) {
        echo_request("check", {{"program", check_program}});
        const CoreProgram program = program_from_json(load_json_file(check_program));
        json out;
        out["diagnostics"] = check_core_constraints(program);
        out["ok"] = out["diagnostics"].empty();
        emit(out, check_out, pretty);
        return 0;
      }
      if (check_kernel.empty())
        throw Error(ErrorCode::usage, "check needs --kernel or --program");
      echo_request("check", {{"kernel", check_kernel}});
      const Kernel k = kernel_from_json(load_json_file(check_kernel));
      json out;
      const auto witness = is_symmetric_kernel(k);
      out["symmetric"] = witness.has_value();
      if (witness) {
        out["spec"] = spec_to_json(*witness);
      } else {
        out["reason"] = "no (f, rho, sigma1, sigma2, B) tuple materializes this kernel";
        // A coloring conflict is the sharpest certificate when the
        // decompiler's hypotheses hold; attach it when available.
        try {
          decompile(k, 2 * k.side);
        } catch (const NotRepresentableError& e) {
          if (e.conflict().col >= 0)
            out["conflict"] = {{"row_a", e.conflict().row_a},
                               {"row_b", e.conflict().row_b},
                               {"column", e.conflict().col}};
          out["detail"] = e.what();
        } catch (const Error&) {
          // hypotheses not met; membership answer stands on its own
        }
      }
      emit(out, check_out, pretty);
    } else if (*cmd_compile) {
      echo_request("compile", {{"spec", compile_spec}, {"n", compile_n}});
      const SymmetricKernelSpec spec = spec_from_json(load_json_file(compile_spec));
      const CoreProgram program = compile(spec, compile_n);
      emit(program_to_json(program), compile_out, pretty);
    } else if (*cmd_decompile) {
      echo_request("decompile", {{"kernel", decompile_kernel}, {"n", decompile_n}});
      const Kernel k = kernel_from_json(load_json_file(decompile_kernel));
      const SymmetricKernelSpec spec = decompile(k, decompile_n);
      emit(spec_to_json(spec), decompile_out, pretty);
    } else if (*cmd_sim) {
      echo_request("simulate", {{"program", sim_program}, {"input", sim_input}});
      const CoreProgram program = program_from_json(load_json_file(sim_program));
      const json jin = load_json_file(sim_input);
      std::vector<Mat> slices;
      if (jin.is_array() && !jin.empty() && jin[0].is_array() && !jin[0].empty() &&
          jin[0][0].is_array())
        for (const json& s : jin) slices.push_back(mat_from_json(s));
      else
        slices.push_back(mat_from_json(jin));
      const std::vector<double> out = simulate_core(program, slices);
      emit(json(out), sim_out, pretty);
    } else if (*cmd_conv) {
      echo_request("conv", {{"kernel", conv_kernel},
                            {"input", conv_input},
                            {"stride", conv_stride}});
      const Kernel k = kernel_from_json(load_json_file(conv_kernel));
      if (!k.is_2d())
        throw Error(ErrorCode::constraint, "conv expects a 2-D kernel");
      const Mat x = mat_from_json(load_json_file(conv_input));
      const Mat y = conv2d_valid(x, k.slice(0), conv_stride);
      // Flattened column-major to match simulate's output ordering.
      emit(json(vectorize(y)), conv_out, pretty);
    } else if (*cmd_toep) {
      echo_request("toeplitz", {{"kernel", toep_kernel}, {"n", toep_n}});
      const Kernel k = kernel_from_json(load_json_file(toep_kernel));
      if (!k.is_2d())
        throw Error(ErrorCode::constraint, "toeplitz expects a 2-D kernel");
      const BlockToeplitz bt = build_block_toeplitz(k.slice(0), toep_n);
      json out;
      out["n"] = bt.n;
      out["l"] = bt.l;
      out["W"] = mat_to_json(bt.w);
      out["mask"] = mat_to_json(nonzero_mask(bt));
      emit(out, toep_out, pretty);
    } else if (*cmd_project) {
      echo_request("project", {{"kernel", project_kernel},
                               {"mode", project_mode},
                               {"iters", project_iters},
                               {"seed", project_seed}});
      const Kernel k = kernel_from_json(load_json_file(project_kernel));
      ProjectionResult result =
          project_mode == "exact"
              ? project_exact(k)
              : project_alternating(k, ternary_tables(), project_iters, project_seed);
      json out = projection_to_json(result);
      out["mode"] = project_mode;
      if (project_threshold >= 0.0) {
        SymmetricKernelSpec snapped = result.spec;
        snapped.mask = binarize_mask(snapped.mask, project_threshold);
        out["binarized"] = {{"threshold", project_threshold},
                            {"spec", spec_to_json(snapped)},
                            {"distance", frobenius_distance(k, materialize(snapped))}};
      }
      emit(out, project_out, pretty);
    } else if (*cmd_train) {
      TrainConfig cfg = train_config_from_json(load_json_file(train_config));
      if (train_seed_opt->count() > 0) cfg.hyper.seed = train_seed;
      if (train_epochs > 0) cfg.plan.warmup_epochs = train_epochs;
      if (train_stage > 0) cfg.plan.stage_limit = train_stage;
      echo_request("train", {{"config", train_config},
                             {"seed", cfg.hyper.seed},
                             {"warmup_epochs", cfg.plan.warmup_epochs},
                             {"stage", cfg.plan.stage_limit}});
      const Dataset data = load_dataset(cfg.dataset);
      TrainResult result = train(cfg.network, data, cfg.hyper, cfg.plan);
      const std::string jsonl = metrics_to_jsonl(result.metrics);
      if (train_metrics.empty()) {
        std::cout << jsonl;
      } else {
        std::ofstream mout(train_metrics);
        if (!mout) throw Error(ErrorCode::constraint, "cannot write " + train_metrics);
        mout << jsonl;
      }
      if (!train_checkpoint.empty())
        save_json_file(train_checkpoint, checkpoint_to_json(result.net), pretty);
    } else if (*cmd_eval) {
      echo_request("eval", {{"checkpoint", eval_checkpoint}, {"config", eval_config}});
      const Network net = network_from_checkpoint(load_json_file(eval_checkpoint));
      const TrainConfig cfg = train_config_from_json(load_json_file(eval_config));
      const Dataset data = load_dataset(cfg.dataset);
      json out;
      out["accuracy"] = evaluate_accuracy(net, data);
      out["samples"] = data.size();
      emit(out, eval_out, pretty);
    } else if (*cmd_sparsity) {
      echo_request("sparsity", {{"checkpoint", sp_checkpoint}, {"config", sp_config}});
      const Network net = network_from_checkpoint(load_json_file(sp_checkpoint));
      const TrainConfig cfg = train_config_from_json(load_json_file(sp_config));
      const Dataset data = load_dataset(cfg.dataset);
      json out;
      out["sparsity"] = measure_sparsity(net, data);
      out["samples"] = data.size();
      emit(out, sp_out, pretty);
    } else if (*cmd_cores) {
      echo_request("estimate-cores", {{"checkpoint", cores_checkpoint}});
      const Network net = network_from_checkpoint(load_json_file(cores_checkpoint));
      json out;
      out["cores"] = estimate_cores(net);
      emit(out, cores_out, pretty);
    }
  } catch (const Error& e) {
    std::cerr << error_object(e).dump() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    json j;
    j["error"] = {{"code", "internal"}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace symkernel
