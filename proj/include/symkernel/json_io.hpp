#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "symkernel/core.hpp"
#include "symkernel/kernel.hpp"
#include "symkernel/matrix.hpp"
#include "symkernel/network.hpp"
#include "symkernel/projection.hpp"
#include "symkernel/trainer.hpp"

namespace symkernel {

using json = nlohmann::json;

json load_json_file(const std::string& path);                      // Error(parse)
void save_json_file(const std::string& path, const json& j, bool pretty);
std::string dump_json(const json& j, bool pretty);

json permutation_to_json(const Permutation& p);
Permutation permutation_from_json(const json& j);

// Kernels and matrices are plain nested arrays; 3-D kernels are arrays of
// l x l slices, [slice][row][col].
json kernel_to_json(const Kernel& k);
Kernel kernel_from_json(const json& j);
json mat_to_json(const Mat& m);
Mat mat_from_json(const json& j);

// {"f":[4], "rho":[m], "sigma1":[4], "sigma2":[4], "B":nested}
json spec_to_json(const SymmetricKernelSpec& spec);
SymmetricKernelSpec spec_from_json(const json& j);

// {"n":.., "l":.., "m":.., "g":[..], "C":[[0/1..]..], "strengths":[[4]..]}
json program_to_json(const CoreProgram& p);
CoreProgram program_from_json(const json& j);

json projection_to_json(const ProjectionResult& r);

struct DatasetConfig {
  std::string kind = "synthetic";  // or "cifar10"
  int count = 512;
  std::uint64_t seed = 7;
  std::vector<std::string> files;
  int limit = -1;
};

struct TrainConfig {
  DatasetConfig dataset;
  NetworkSpec network;
  Hyperparameters hyper;
  ReplacementPlan plan;
};

TrainConfig train_config_from_json(const json& j);
Dataset load_dataset(const DatasetConfig& cfg);

json checkpoint_to_json(const Network& net);
Network network_from_checkpoint(const json& j);

json epoch_metrics_to_json(const EpochMetrics& em);
std::string metrics_to_jsonl(const std::vector<EpochMetrics>& metrics);

}  // namespace symkernel
