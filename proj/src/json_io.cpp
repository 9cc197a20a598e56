#include "symkernel/json_io.hpp"

#include <fstream>
#include <sstream>

namespace symkernel {

namespace {

[[noreturn]] void parse_fail(const std::string& what) {
  throw Error(ErrorCode::parse, what);
}

json expect_array(const json& j, const char* what) {
  if (!j.is_array()) parse_fail(std::string(what) + " must be a JSON array");
  return j;
}

int expect_int(const json& j, const char* what) {
  if (!j.is_number_integer()) parse_fail(std::string(what) + " must be an integer");
  return j.get<int>();
}

double expect_number(const json& j, const char* what) {
  if (!j.is_number()) parse_fail(std::string(what) + " must be a number");
  return j.get<double>();
}

const json& expect_key(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    parse_fail(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

}  // namespace

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) parse_fail("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    parse_fail("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void save_json_file(const std::string& path, const json& j, bool pretty) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::constraint, "cannot write file: " + path);
  out << dump_json(j, pretty) << "\n";
}

std::string dump_json(const json& j, bool pretty) {
  return pretty ? j.dump(2) : j.dump();
}

json permutation_to_json(const Permutation& p) {
  return json(p.image());
}

Permutation permutation_from_json(const json& j) {
  expect_array(j, "permutation");
  if (j.size() != 4) parse_fail("permutation image must have 4 entries");
  std::array<int, 4> img;
  for (int i = 0; i < 4; ++i) img[i] = expect_int(j[i], "permutation entry");
  return Permutation::from_image(img);  // throws Error(constraint) if invalid
}

json kernel_to_json(const Kernel& k) {
  auto slice_json = [&](int s) {
    json rows = json::array();
    for (int i = 0; i < k.side; ++i) {
      json row = json::array();
      for (int j = 0; j < k.side; ++j) row.push_back(k.at(i, j, s));
      rows.push_back(row);
    }
    return rows;
  };
  if (k.feats == 1) return slice_json(0);
  json slices = json::array();
  for (int s = 0; s < k.feats; ++s) slices.push_back(slice_json(s));
  return slices;
}

namespace {

Mat mat_from_rows(const json& rows, const char* what) {
  expect_array(rows, what);
  if (rows.empty()) parse_fail(std::string(what) + " must be non-empty");
  const int r = static_cast<int>(rows.size());
  const int c = static_cast<int>(expect_array(rows[0], what).size());
  if (c == 0) parse_fail(std::string(what) + " rows must be non-empty");
  Mat m(r, c);
  for (int i = 0; i < r; ++i) {
    expect_array(rows[i], what);
    if (static_cast<int>(rows[i].size()) != c)
      parse_fail(std::string(what) + " rows have inconsistent lengths");
    for (int j = 0; j < c; ++j) m(i, j) = expect_number(rows[i][j], what);
  }
  return m;
}

}  // namespace

Kernel kernel_from_json(const json& j) {
  expect_array(j, "kernel");
  if (j.empty()) parse_fail("kernel must be non-empty");
  const bool three_d = j[0].is_array() && !j[0].empty() && j[0][0].is_array();
  std::vector<Mat> slices;
  if (three_d)
    for (const json& s : j) slices.push_back(mat_from_rows(s, "kernel slice"));
  else
    slices.push_back(mat_from_rows(j, "kernel"));
  const int l = slices[0].rows;
  for (const Mat& s : slices)
    if (s.rows != l || s.cols != l) parse_fail("kernel slices must be square and equal-sized");
  Kernel k(l, static_cast<int>(slices.size()));
  for (int s = 0; s < k.feats; ++s)
    for (int i = 0; i < l; ++i)
      for (int jj = 0; jj < l; ++jj) k.at(i, jj, s) = slices[s](i, jj);
  return k;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows; ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols; ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Mat mat_from_json(const json& j) { return mat_from_rows(j, "matrix"); }

json spec_to_json(const SymmetricKernelSpec& spec) {
  json j;
  j["f"] = json(spec.f.table);
  j["rho"] = json(spec.rho);
  j["sigma1"] = permutation_to_json(spec.sigma1);
  j["sigma2"] = permutation_to_json(spec.sigma2);
  j["B"] = kernel_to_json(spec.mask);
  return j;
}

SymmetricKernelSpec spec_from_json(const json& j) {
  SymmetricKernelSpec spec;
  const json& f = expect_array(expect_key(j, "f"), "f");
  if (f.size() != 4) parse_fail("\"f\" must have 4 entries");
  for (int i = 0; i < 4; ++i) spec.f.table[i] = expect_int(f[i], "f entry");
  const json& rho = expect_key(j, "rho");
  if (rho.is_number_integer())
    spec.rho = {rho.get<int>()};
  else {
    expect_array(rho, "rho");
    for (const json& r : rho) spec.rho.push_back(expect_int(r, "rho entry"));
  }
  spec.sigma1 = permutation_from_json(expect_key(j, "sigma1"));
  spec.sigma2 = permutation_from_json(expect_key(j, "sigma2"));
  spec.mask = kernel_from_json(expect_key(j, "B"));
  spec.validate();
  return spec;
}

json program_to_json(const CoreProgram& p) {
  json j;
  j["n"] = p.n;
  j["l"] = p.l;
  j["m"] = p.m;
  j["g"] = json(p.g);
  json c = json::array();
  for (int r = 0; r < p.input_lines(); ++r) {
    json row = json::array();
    for (int q = 0; q < p.neurons(); ++q) row.push_back(static_cast<int>(p.conn(r, q)));
    c.push_back(row);
  }
  j["C"] = c;
  json strengths = json::array();
  for (const StrengthFunction& s : p.strengths) strengths.push_back(json(s.table));
  j["strengths"] = strengths;
  return j;
}

CoreProgram program_from_json(const json& j) {
  CoreProgram p;
  p.n = expect_int(expect_key(j, "n"), "n");
  p.l = expect_int(expect_key(j, "l"), "l");
  p.m = j.contains("m") ? expect_int(j.at("m"), "m") : 1;
  if (p.n < 1 || p.l < 1 || p.l > p.n || p.m < 1)
    parse_fail("inconsistent program dimensions");
  const json& g = expect_array(expect_key(j, "g"), "g");
  if (static_cast<int>(g.size()) != p.input_lines())
    parse_fail("\"g\" length does not match m*n^2");
  for (const json& v : g) p.g.push_back(expect_int(v, "g entry"));
  const json& c = expect_array(expect_key(j, "C"), "C");
  if (static_cast<int>(c.size()) != p.input_lines())
    parse_fail("\"C\" row count does not match m*n^2");
  p.connectivity.resize(static_cast<std::size_t>(p.input_lines()) * p.neurons());
  for (int r = 0; r < p.input_lines(); ++r) {
    const json& row = expect_array(c[r], "C row");
    if (static_cast<int>(row.size()) != p.neurons())
      parse_fail("\"C\" column count does not match (n-l+1)^2");
    for (int q = 0; q < p.neurons(); ++q) {
      const int v = expect_int(row[q], "C entry");
      if (v != 0 && v != 1) parse_fail("\"C\" entries must be 0 or 1");
      p.connectivity[static_cast<std::size_t>(r) * p.neurons() + q] =
          static_cast<std::uint8_t>(v);
    }
  }
  const json& strengths = expect_array(expect_key(j, "strengths"), "strengths");
  if (static_cast<int>(strengths.size()) != p.neurons())
    parse_fail("\"strengths\" length does not match (n-l+1)^2");
  for (const json& s : strengths) {
    const json& arr = expect_array(s, "strength table");
    if (arr.size() != 4) parse_fail("strength tables must have 4 entries");
    StrengthFunction f;
    for (int i = 0; i < 4; ++i) f.table[i] = expect_int(arr[i], "strength value");
    p.strengths.push_back(f);
  }
  return p;
}

json projection_to_json(const ProjectionResult& r) {
  json j;
  j["spec"] = spec_to_json(r.spec);
  j["distance"] = r.distance;
  j["candidates_examined"] = r.candidates_examined;
  if (!r.iteration_distances.empty()) j["iteration_distances"] = r.iteration_distances;
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    cfg.dataset.kind = expect_key(d, "kind").get<std::string>();
    if (cfg.dataset.kind == "synthetic") {
      if (d.contains("count")) cfg.dataset.count = expect_int(d.at("count"), "count");
      if (d.contains("seed"))
        cfg.dataset.seed = static_cast<std::uint64_t>(expect_int(d.at("seed"), "seed"));
    } else if (cfg.dataset.kind == "cifar10") {
      for (const json& f : expect_array(expect_key(d, "files"), "files"))
        cfg.dataset.files.push_back(f.get<std::string>());
      if (d.contains("limit")) cfg.dataset.limit = expect_int(d.at("limit"), "limit");
    } else {
      parse_fail("unknown dataset kind: " + cfg.dataset.kind);
    }
  }
  const json& input = expect_key(j, "input");
  cfg.network.in_h = expect_int(expect_key(input, "h"), "input h");
  cfg.network.in_w = expect_int(expect_key(input, "w"), "input w");
  cfg.network.in_c = expect_int(expect_key(input, "c"), "input c");
  cfg.network.num_classes = expect_int(expect_key(j, "classes"), "classes");
  if (j.contains("T")) cfg.network.t = expect_number(j.at("T"), "T");
  for (const json& l : expect_array(expect_key(j, "layers"), "layers")) {
    LayerSpec ls;
    ls.patch = expect_int(expect_key(l, "patch"), "patch");
    ls.stride = l.contains("stride") ? expect_int(l.at("stride"), "stride") : 1;
    ls.in_features = expect_int(expect_key(l, "in"), "in");
    ls.out_features = expect_int(expect_key(l, "out"), "out");
    ls.groups = l.contains("groups") ? expect_int(l.at("groups"), "groups") : 1;
    cfg.network.layers.push_back(ls);
  }
  if (j.contains("hyper")) {
    const json& h = j.at("hyper");
    if (h.contains("learning_rate"))
      cfg.hyper.learning_rate = expect_number(h.at("learning_rate"), "learning_rate");
    if (h.contains("momentum"))
      cfg.hyper.momentum = expect_number(h.at("momentum"), "momentum");
    if (h.contains("weight_decay"))
      cfg.hyper.weight_decay = expect_number(h.at("weight_decay"), "weight_decay");
    if (h.contains("batch_size"))
      cfg.hyper.batch_size = expect_int(h.at("batch_size"), "batch_size");
    if (h.contains("dropout")) cfg.hyper.dropout = expect_number(h.at("dropout"), "dropout");
    if (h.contains("seed"))
      cfg.hyper.seed = static_cast<std::uint64_t>(expect_int(h.at("seed"), "seed"));
  }
  if (j.contains("plan")) {
    const json& p = j.at("plan");
    if (p.contains("warmup_epochs"))
      cfg.plan.warmup_epochs = expect_int(p.at("warmup_epochs"), "warmup_epochs");
    if (p.contains("replace_gap"))
      cfg.plan.replace_gap = expect_int(p.at("replace_gap"), "replace_gap");
    if (p.contains("binarize_epochs"))
      cfg.plan.binarize_epochs = expect_int(p.at("binarize_epochs"), "binarize_epochs");
    if (p.contains("threshold_gap"))
      cfg.plan.threshold_gap = expect_int(p.at("threshold_gap"), "threshold_gap");
    if (p.contains("finetune_epochs"))
      cfg.plan.finetune_epochs = expect_int(p.at("finetune_epochs"), "finetune_epochs");
    if (p.contains("stage")) cfg.plan.stage_limit = expect_int(p.at("stage"), "stage");
    if (p.contains("anneal")) {
      const std::string shape = p.at("anneal").get<std::string>();
      if (shape == "linear")
        cfg.plan.anneal_shape = AnnealShape::linear;
      else if (shape == "smoothstep")
        cfg.plan.anneal_shape = AnnealShape::smoothstep;
      else
        parse_fail("unknown anneal shape: " + shape);
    }
  }
  return cfg;
}

Dataset load_dataset(const DatasetConfig& cfg) {
  if (cfg.kind == "synthetic") return make_synthetic_two_class(cfg.count, cfg.seed);
  if (cfg.kind == "cifar10") return load_cifar10(cfg.files, cfg.limit);
  parse_fail("unknown dataset kind: " + cfg.kind);
}

namespace {

const char* weight_mode_name(WeightMode m) {
  switch (m) {
    case WeightMode::unconstrained: return "unconstrained";
    case WeightMode::relaxed_symmetric: return "relaxed-symmetric";
    case WeightMode::frozen_symmetric: return "frozen-symmetric";
  }
  return "unconstrained";
}

WeightMode weight_mode_from(const std::string& s) {
  if (s == "unconstrained") return WeightMode::unconstrained;
  if (s == "relaxed-symmetric") return WeightMode::relaxed_symmetric;
  if (s == "frozen-symmetric") return WeightMode::frozen_symmetric;
  parse_fail("unknown weight mode: " + s);
}

}  // namespace

json checkpoint_to_json(const Network& net) {
  json j;
  j["format"] = "symkernel-checkpoint";
  j["input"] = {{"h", net.spec.in_h}, {"w", net.spec.in_w}, {"c", net.spec.in_c}};
  j["classes"] = net.spec.num_classes;
  j["T"] = net.spec.t;
  json layers = json::array();
  for (const Layer& l : net.layers) {
    json jl;
    jl["patch"] = l.spec.patch;
    jl["stride"] = l.spec.stride;
    jl["in"] = l.spec.in_features;
    jl["out"] = l.spec.out_features;
    jl["groups"] = l.spec.groups;
    jl["weight_mode"] = weight_mode_name(l.wmode);
    jl["activation"] = l.amode == ActivationMode::threshold ? "threshold" : "noisy-relu";
    if (l.wmode == WeightMode::unconstrained) {
      json ws = json::array();
      for (const Kernel& w : l.weights) ws.push_back(kernel_to_json(w));
      jl["weights"] = ws;
    } else {
      json st = json::array(), masks = json::array();
      for (std::size_t oc = 0; oc < l.structure.size(); ++oc) {
        json s;
        s["f"] = json(l.structure[oc].f.table);
        s["rho"] = json(l.structure[oc].rho);
        s["sigma1"] = permutation_to_json(l.structure[oc].sigma1);
        s["sigma2"] = permutation_to_json(l.structure[oc].sigma2);
        st.push_back(s);
        masks.push_back(kernel_to_json(l.mask[oc]));
      }
      jl["structure"] = st;
      jl["mask"] = masks;
    }
    jl["bn"] = {{"gamma", l.gamma}, {"beta", l.beta}, {"mean", l.run_mean},
                {"var", l.run_var}};
    layers.push_back(jl);
  }
  j["layers"] = layers;
  return j;
}

Network network_from_checkpoint(const json& j) {
  if (!j.contains("format") || j.at("format") != "symkernel-checkpoint")
    parse_fail("not a symkernel checkpoint");
  NetworkSpec spec;
  const json& input = expect_key(j, "input");
  spec.in_h = expect_int(expect_key(input, "h"), "input h");
  spec.in_w = expect_int(expect_key(input, "w"), "input w");
  spec.in_c = expect_int(expect_key(input, "c"), "input c");
  spec.num_classes = expect_int(expect_key(j, "classes"), "classes");
  spec.t = expect_number(expect_key(j, "T"), "T");
  const json& layers = expect_array(expect_key(j, "layers"), "layers");
  for (const json& jl : layers) {
    LayerSpec ls;
    ls.patch = expect_int(expect_key(jl, "patch"), "patch");
    ls.stride = expect_int(expect_key(jl, "stride"), "stride");
    ls.in_features = expect_int(expect_key(jl, "in"), "in");
    ls.out_features = expect_int(expect_key(jl, "out"), "out");
    ls.groups = expect_int(expect_key(jl, "groups"), "groups");
    spec.layers.push_back(ls);
  }
  spec.validate();

  Network net;
  net.spec = spec;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const json& jl = layers[li];
    Layer layer;
    layer.spec = spec.layers[li];
    layer.wmode = weight_mode_from(expect_key(jl, "weight_mode").get<std::string>());
    const std::string act = expect_key(jl, "activation").get<std::string>();
    if (act != "threshold" && act != "noisy-relu") parse_fail("unknown activation: " + act);
    layer.amode =
        act == "threshold" ? ActivationMode::threshold : ActivationMode::noisy_relu;
    const int m = layer.in_per_group();
    if (layer.wmode == WeightMode::unconstrained) {
      for (const json& w : expect_array(expect_key(jl, "weights"), "weights"))
        layer.weights.push_back(kernel_from_json(w));
    } else {
      const json& st = expect_array(expect_key(jl, "structure"), "structure");
      const json& masks = expect_array(expect_key(jl, "mask"), "mask");
      if (st.size() != masks.size()) parse_fail("structure/mask count mismatch");
      for (std::size_t oc = 0; oc < st.size(); ++oc) {
        SymmetricStructure s;
        const json& f = expect_array(expect_key(st[oc], "f"), "f");
        if (f.size() != 4) parse_fail("\"f\" must have 4 entries");
        for (int i = 0; i < 4; ++i) s.f.table[i] = expect_int(f[i], "f entry");
        for (const json& r : expect_array(expect_key(st[oc], "rho"), "rho"))
          s.rho.push_back(expect_int(r, "rho entry"));
        s.sigma1 = permutation_from_json(expect_key(st[oc], "sigma1"));
        s.sigma2 = permutation_from_json(expect_key(st[oc], "sigma2"));
        if (!commutes(s.sigma1, s.sigma2)) parse_fail("checkpoint permutations do not commute");
        layer.structure.push_back(s);
        layer.mask.push_back(kernel_from_json(masks[oc]));
        Kernel pat(layer.spec.patch, m);
        for (int sl = 0; sl < m; ++sl) {
          const std::vector<int> lab =
              orbit_labels(s.sigma1, s.sigma2, s.rho[sl], layer.spec.patch);
          for (int i = 0; i < layer.spec.patch; ++i)
            for (int jj = 0; jj < layer.spec.patch; ++jj)
              pat.at(i, jj, sl) = s.f(lab[i * layer.spec.patch + jj]);
        }
        layer.pattern.push_back(std::move(pat));
        layer.weights.push_back(Kernel(layer.spec.patch, m));
      }
      refresh_materialized_weights(layer);
    }
    if (static_cast<int>(layer.weights.size()) != layer.spec.out_features)
      parse_fail("kernel count does not match output features");
    for (const Kernel& w : layer.weights)
      if (w.side != layer.spec.patch || w.feats != m)
        parse_fail("kernel shape mismatch in checkpoint");
    const json& bn = expect_key(jl, "bn");
    layer.gamma = expect_key(bn, "gamma").get<std::vector<double>>();
    layer.beta = expect_key(bn, "beta").get<std::vector<double>>();
    layer.run_mean = expect_key(bn, "mean").get<std::vector<double>>();
    layer.run_var = expect_key(bn, "var").get<std::vector<double>>();
    const std::size_t oc = static_cast<std::size_t>(layer.spec.out_features);
    if (layer.gamma.size() != oc || layer.beta.size() != oc ||
        layer.run_mean.size() != oc || layer.run_var.size() != oc)
      parse_fail("batch-norm vectors do not match output features");
    net.layers.push_back(std::move(layer));
  }
  return net;
}

json epoch_metrics_to_json(const EpochMetrics& em) {
  json j;
  j["epoch"] = em.epoch;
  j["stage"] = em.stage;
  j["epsilon"] = em.epsilon;
  j["loss"] = em.loss;
  j["accuracy"] = em.accuracy;
  j["sparsity"] = em.sparsity;
  j["mask_min"] = em.mask_min;
  j["mask_max"] = em.mask_max;
  json events = json::array();
  for (const EpochEvent& e : em.events) {
    json je;
    je["kind"] = e.kind;
    if (e.layer >= 0) je["layer"] = e.layer;
    if (e.kind == "replace") je["projection_distance"] = e.projection_distance;
    events.push_back(je);
  }
  j["events"] = events;
  return j;
}

std::string metrics_to_jsonl(const std::vector<EpochMetrics>& metrics) {
  std::ostringstream os;
  for (const EpochMetrics& em : metrics) os << epoch_metrics_to_json(em).dump() << "\n";
  return os.str();
}

}  // namespace symkernel
