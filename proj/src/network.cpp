#include "symkernel/network.hpp"

#include <cmath>
#include <sstream>

#include "symkernel/detrng.hpp"
#include "symkernel/error.hpp"

namespace symkernel {

void NetworkSpec::validate() const {
  if (in_h < 1 || in_w < 1 || in_c < 1)
    throw Error(ErrorCode::constraint, "input dimensions must be positive");
  if (num_classes < 2) throw Error(ErrorCode::constraint, "need at least two classes");
  if (t <= 0.0) throw Error(ErrorCode::constraint, "saturation level must be positive");
  if (layers.empty()) throw Error(ErrorCode::constraint, "network needs at least one layer");

  int h = in_h, w = in_w, c = in_c;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    std::ostringstream os;
    os << "layer " << i << ": ";
    if (l.patch < 1 || (l.stride != 1 && l.stride != 2)) {
      os << "patch must be >= 1 and stride in {1,2}";
      throw Error(ErrorCode::constraint, os.str());
    }
    if (l.in_features != c) {
      os << "expects " << l.in_features << " input features, previous layer provides " << c;
      throw Error(ErrorCode::constraint, os.str());
    }
    if (l.groups < 1 || l.in_features % l.groups != 0 || l.out_features % l.groups != 0) {
      os << "groups must evenly divide input and output features";
      throw Error(ErrorCode::constraint, os.str());
    }
    const int fan_in = l.patch * l.patch * (l.in_features / l.groups);
    if (fan_in > 256) {
      os << "group filter size " << fan_in << " exceeds the 256-line core limit";
      throw Error(ErrorCode::constraint, os.str());
    }
    if (l.out_features / l.groups > 256) {
      os << "per-group output features exceed the 256-neuron core limit";
      throw Error(ErrorCode::constraint, os.str());
    }
    if (l.patch > h || l.patch > w) {
      os << "patch " << l.patch << " does not fit the " << h << "x" << w << " input";
      throw Error(ErrorCode::constraint, os.str());
    }
    h = (h - l.patch) / l.stride + 1;
    w = (w - l.patch) / l.stride + 1;
    c = l.out_features;
  }
  if (c % num_classes != 0)
    throw Error(ErrorCode::constraint,
                "final features must divide uniformly among the classes");
}

std::vector<std::array<int, 3>> NetworkSpec::output_shapes() const {
  std::vector<std::array<int, 3>> shapes;
  int h = in_h, w = in_w;
  for (const LayerSpec& l : layers) {
    h = (h - l.patch) / l.stride + 1;
    w = (w - l.patch) / l.stride + 1;
    shapes.push_back({h, w, l.out_features});
  }
  return shapes;
}

Network build_network(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Network net;
  net.spec = spec;
  DetRng rng(mix(seed, 0x696e6974ULL));  // "init"
  for (const LayerSpec& ls : spec.layers) {
    Layer layer;
    layer.spec = ls;
    const int m = ls.in_features / ls.groups;
    const double bound = std::sqrt(3.0 / (ls.patch * ls.patch * m));
    layer.weights.reserve(ls.out_features);
    for (int oc = 0; oc < ls.out_features; ++oc) {
      Kernel k(ls.patch, m);
      for (double& v : k.values) v = rng.uniform(-bound, bound);
      layer.weights.push_back(std::move(k));
    }
    layer.gamma.assign(ls.out_features, spec.t / 4);
    layer.beta.assign(ls.out_features, spec.t / 2);
    layer.run_mean.assign(ls.out_features, 0.0);
    layer.run_var.assign(ls.out_features, 1.0);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

void refresh_materialized_weights(Layer& layer) {
  for (std::size_t oc = 0; oc < layer.weights.size(); ++oc) {
    Kernel& w = layer.weights[oc];
    const Kernel& b = layer.mask[oc];
    const Kernel& p = layer.pattern[oc];
    for (std::size_t q = 0; q < w.values.size(); ++q)
      w.values[q] = b.values[q] * p.values[q];
  }
}

}  // namespace symkernel
