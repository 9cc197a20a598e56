#include "symkernel/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "symkernel/detrng.hpp"
#include "symkernel/error.hpp"
#include "symkernel/projection.hpp"

namespace symkernel {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;
// Class scores are mean activations over the class block scaled by this
// gain; it bounds the logits (activations live in [0, T]) so the readout
// cannot saturate the softmax or blow up per-unit gradients.
constexpr double kReadoutGain = 6.0;

struct LayerDims {
  int in_h, in_w, in_c;
  int out_h, out_w, out_c;
};

std::vector<LayerDims> layer_dims(const NetworkSpec& spec) {
  std::vector<LayerDims> dims;
  int h = spec.in_h, w = spec.in_w, c = spec.in_c;
  for (const LayerSpec& l : spec.layers) {
    LayerDims d;
    d.in_h = h;
    d.in_w = w;
    d.in_c = c;
    d.out_h = (h - l.patch) / l.stride + 1;
    d.out_w = (w - l.patch) / l.stride + 1;
    d.out_c = l.out_features;
    dims.push_back(d);
    h = d.out_h;
    w = d.out_w;
    c = d.out_c;
  }
  return dims;
}

struct RunMode {
  bool train_stats = false;    // batch statistics instead of running ones
  bool update_running = false;
  double epsilon = 0.0;        // noise half-range for noisy-ReLU layers
  double dropout = 0.0;
  std::uint64_t key = 0;       // per-batch key for noise/dropout draws
};

inline double draw_uniform(std::uint64_t base, int layer, int sample_id, int pos) {
  return u01(mix(mix(mix(base, static_cast<std::uint64_t>(layer)),
                     static_cast<std::uint64_t>(sample_id)),
                 static_cast<std::uint64_t>(pos)));
}

inline double noise_at(const RunMode& mode, int layer, int sample_id, int pos) {
  if (mode.epsilon == 0.0) return 0.0;
  const double u = draw_uniform(mix(mode.key, 0xA11CEULL), layer, sample_id, pos);
  return (2.0 * u - 1.0) * mode.epsilon;
}

inline bool dropped(const RunMode& mode, int layer, int sample_id, int pos) {
  if (mode.dropout <= 0.0) return false;
  return draw_uniform(mix(mode.key, 0xD120ULL), layer, sample_id, pos) < mode.dropout;
}

void conv_forward_sample(const Layer& layer, const LayerDims& d, const double* in,
                         double* out) {
  const LayerSpec& ls = layer.spec;
  const int ipg = layer.in_per_group();
  const int opg = layer.out_per_group();
  const int s = ls.stride;
  for (int oc = 0; oc < ls.out_features; ++oc) {
    const int gi = oc / opg;
    const Kernel& w = layer.weights[oc];
    for (int oy = 0; oy < d.out_h; ++oy)
      for (int ox = 0; ox < d.out_w; ++ox) {
        double acc = 0.0;
        for (int icl = 0; icl < ipg; ++icl) {
          const int ic = gi * ipg + icl;
          for (int ky = 0; ky < ls.patch; ++ky)
            for (int kx = 0; kx < ls.patch; ++kx)
              acc += in[(ic * d.in_h + oy * s + ky) * d.in_w + ox * s + kx] *
                     w.at(ky, kx, icl);
        }
        out[(oc * d.out_h + oy) * d.out_w + ox] = acc;
      }
  }
}

// dout -> din (zero-initialized by caller) and per-sample weight grads
// (flat, kernel order per output feature).
void conv_backward_sample(const Layer& layer, const LayerDims& d, const double* in,
                          const double* dout, double* din, double* dw) {
  const LayerSpec& ls = layer.spec;
  const int ipg = layer.in_per_group();
  const int opg = layer.out_per_group();
  const int s = ls.stride;
  const int ksize = ls.patch * ls.patch * ipg;
  for (int oc = 0; oc < ls.out_features; ++oc) {
    const int gi = oc / opg;
    const Kernel& w = layer.weights[oc];
    for (int oy = 0; oy < d.out_h; ++oy)
      for (int ox = 0; ox < d.out_w; ++ox) {
        const double g = dout[(oc * d.out_h + oy) * d.out_w + ox];
        if (g == 0.0) continue;
        for (int icl = 0; icl < ipg; ++icl) {
          const int ic = gi * ipg + icl;
          for (int ky = 0; ky < ls.patch; ++ky)
            for (int kx = 0; kx < ls.patch; ++kx) {
              const int in_idx = (ic * d.in_h + oy * s + ky) * d.in_w + ox * s + kx;
              if (din) din[in_idx] += g * w.at(ky, kx, icl);
              dw[oc * ksize + (icl * ls.patch + ky) * ls.patch + kx] += g * in[in_idx];
            }
        }
      }
  }
}

// Fixed pairwise tree over the sample axis keeps gradient accumulation
// order independent of the thread count.
void reduce_over_samples(std::vector<double>& buf, int batch, int width) {
  for (int gap = 1; gap < batch; gap *= 2) {
    for (int i = 0; i + gap < batch; i += 2 * gap) {
      double* dst = buf.data() + static_cast<std::size_t>(i) * width;
      const double* src = buf.data() + static_cast<std::size_t>(i + gap) * width;
#pragma omp parallel for schedule(static)
      for (int p = 0; p < width; ++p) dst[p] += src[p];
    }
  }
}

struct BatchRun {
  double loss_sum = 0.0;
  int correct = 0;
  long long act_nonzero = 0;
  long long act_total = 0;
  double min_kink = 1e300;
  // flat gradients per layer; empty unless requested
  std::vector<std::vector<double>> dweights, dgamma, dbeta;
};

// Forward (and optionally backward) over one batch of sample indices.
// `net` is only mutated when mode.update_running is set.
BatchRun run_batch(Network& net, const Dataset& data, const std::vector<int>& ids,
                   const RunMode& mode, bool want_grads,
                   std::vector<std::vector<double>>* traces = nullptr) {
  const std::vector<LayerDims> dims = layer_dims(net.spec);
  const int batch = static_cast<int>(ids.size());
  const int num_layers = static_cast<int>(net.layers.size());
  const double t_sat = net.spec.t;

  // Per-layer flat buffers, batch-major.
  std::vector<std::vector<double>> conv(num_layers), bn(num_layers), act(num_layers);
  std::vector<std::vector<double>> mean(num_layers), var(num_layers);
  for (int li = 0; li < num_layers; ++li) {
    const std::size_t chw =
        static_cast<std::size_t>(dims[li].out_c) * dims[li].out_h * dims[li].out_w;
    conv[li].resize(batch * chw);
    bn[li].resize(batch * chw);
    act[li].resize(batch * chw);
  }
  std::vector<double> input(static_cast<std::size_t>(batch) * data.images[0].size());
  for (int b = 0; b < batch; ++b)
    std::copy(data.images[ids[b]].begin(), data.images[ids[b]].end(),
              input.begin() + static_cast<std::size_t>(b) * data.images[0].size());

  BatchRun run;

  for (int li = 0; li < num_layers; ++li) {
    Layer& layer = net.layers[li];
    const LayerDims& d = dims[li];
    const std::size_t in_chw = static_cast<std::size_t>(d.in_c) * d.in_h * d.in_w;
    const std::size_t out_chw = static_cast<std::size_t>(d.out_c) * d.out_h * d.out_w;
    const double* src = li == 0 ? input.data() : act[li - 1].data();

#pragma omp parallel for schedule(static)
    for (int b = 0; b < batch; ++b)
      conv_forward_sample(layer, d, src + b * in_chw, conv[li].data() + b * out_chw);

    // Batch-norm statistics; sums run in fixed (sample, position) order.
    const int spatial = d.out_h * d.out_w;
    const long long count = static_cast<long long>(batch) * spatial;
    mean[li].assign(d.out_c, 0.0);
    var[li].assign(d.out_c, 0.0);
    if (mode.train_stats) {
#pragma omp parallel for schedule(static)
      for (int f = 0; f < d.out_c; ++f) {
        double s1 = 0.0;
        for (int b = 0; b < batch; ++b) {
          const double* x = conv[li].data() + b * out_chw + f * spatial;
          for (int p = 0; p < spatial; ++p) s1 += x[p];
        }
        const double mu = s1 / count;
        double s2 = 0.0;
        for (int b = 0; b < batch; ++b) {
          const double* x = conv[li].data() + b * out_chw + f * spatial;
          for (int p = 0; p < spatial; ++p) s2 += (x[p] - mu) * (x[p] - mu);
        }
        mean[li][f] = mu;
        var[li][f] = s2 / count;
      }
      if (mode.update_running) {
        for (int f = 0; f < d.out_c; ++f) {
          layer.run_mean[f] =
              (1 - kBnMomentum) * layer.run_mean[f] + kBnMomentum * mean[li][f];
          layer.run_var[f] =
              (1 - kBnMomentum) * layer.run_var[f] + kBnMomentum * var[li][f];
        }
      }
    } else {
      mean[li] = layer.run_mean;
      var[li] = layer.run_var;
    }

    double layer_min_kink = 1e300;
    long long nonzero = 0;
#pragma omp parallel for schedule(static) reduction(min : layer_min_kink) \
    reduction(+ : nonzero)
    for (int b = 0; b < batch; ++b) {
      const int sid = ids[b];
      for (int f = 0; f < d.out_c; ++f) {
        const double inv = 1.0 / std::sqrt(var[li][f] + kBnEps);
        for (int p = 0; p < spatial; ++p) {
          const std::size_t idx = b * out_chw + f * spatial + p;
          const double z =
              layer.gamma[f] * ((conv[li][idx] - mean[li][f]) * inv) + layer.beta[f];
          bn[li][idx] = z;
          layer_min_kink = std::min(layer_min_kink, std::min(std::abs(z), std::abs(t_sat - z)));
          double a;
          if (layer.amode == ActivationMode::noisy_relu)
            a = noisy_relu_forward(z, t_sat, noise_at(mode, li, sid, f * spatial + p));
          else
            a = threshold_forward(z, t_sat);
          if (mode.dropout > 0.0) {
            if (dropped(mode, li, sid, f * spatial + p))
              a = 0.0;
            else
              a /= 1.0 - mode.dropout;
          }
          if (a != 0.0) ++nonzero;
          act[li][idx] = a;
        }
      }
    }
    run.min_kink = std::min(run.min_kink, layer_min_kink);
    run.act_nonzero += nonzero;
    run.act_total += static_cast<long long>(batch) * out_chw;
  }

  if (traces) {
    traces->clear();
    for (int li = 0; li < num_layers; ++li) traces->push_back(act[li]);
  }

  // Readout: final features split uniformly among classes, activations
  // summed per block; softmax cross-entropy. Per-sample losses are summed
  // serially afterwards so the total does not depend on the thread count.
  const LayerDims& last = dims.back();
  const int classes = net.spec.num_classes;
  const int block = last.out_c / classes;
  const int spatial_last = last.out_h * last.out_w;
  const std::size_t last_chw = static_cast<std::size_t>(last.out_c) * spatial_last;
  std::vector<double> probs(static_cast<std::size_t>(batch) * classes);
  std::vector<double> losses(batch);
  const double readout_norm = kReadoutGain / (block * spatial_last);
  int correct = 0;
#pragma omp parallel for schedule(static) reduction(+ : correct)
  for (int b = 0; b < batch; ++b) {
    double* scores = probs.data() + static_cast<std::size_t>(b) * classes;
    for (int c = 0; c < classes; ++c) {
      double s = 0.0;
      const double* a = act.back().data() + b * last_chw + (c * block) * spatial_last;
      for (int q = 0; q < block * spatial_last; ++q) s += a[q];
      scores[c] = s * readout_norm;
    }
    int arg = 0;
    double hi = scores[0];
    for (int c = 1; c < classes; ++c)
      if (scores[c] > hi) {
        hi = scores[c];
        arg = c;
      }
    if (arg == data.labels[ids[b]]) ++correct;
    double zmax = scores[0];
    for (int c = 1; c < classes; ++c) zmax = std::max(zmax, scores[c]);
    double denom = 0.0;
    for (int c = 0; c < classes; ++c) denom += std::exp(scores[c] - zmax);
    losses[b] = std::log(denom) - (scores[data.labels[ids[b]]] - zmax);
    for (int c = 0; c < classes; ++c) scores[c] = std::exp(scores[c] - zmax) / denom;
  }
  for (double l : losses) run.loss_sum += l;
  run.correct = correct;

  if (!want_grads) return run;

  // ---- backward ----
  run.dweights.resize(num_layers);
  run.dgamma.resize(num_layers);
  run.dbeta.resize(num_layers);

  // d(loss)/d(activation) of the last layer, per sample; upstream grads are
  // carried layer to layer through `dact`.
  std::vector<double> dact(static_cast<std::size_t>(batch) * last_chw);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < batch; ++b) {
    for (int c = 0; c < classes; ++c) {
      const double g =
          (probs[b * classes + c] - (c == data.labels[ids[b]] ? 1.0 : 0.0)) *
          readout_norm;
      double* dst = dact.data() + b * last_chw + (c * block) * spatial_last;
      for (int q = 0; q < block * spatial_last; ++q) dst[q] = g;
    }
  }

  for (int li = num_layers - 1; li >= 0; --li) {
    Layer& layer = net.layers[li];
    const LayerDims& d = dims[li];
    const int spatial = d.out_h * d.out_w;
    const std::size_t in_chw = static_cast<std::size_t>(d.in_c) * d.in_h * d.in_w;
    const std::size_t out_chw = static_cast<std::size_t>(d.out_c) * spatial;
    const long long count = static_cast<long long>(batch) * spatial;

    // Through dropout and the activation to dz (in place over dact).
#pragma omp parallel for schedule(static)
    for (int b = 0; b < batch; ++b) {
      const int sid = ids[b];
      for (int f = 0; f < d.out_c; ++f)
        for (int p = 0; p < spatial; ++p) {
          const std::size_t idx = b * out_chw + f * spatial + p;
          double g = dact[idx];
          if (mode.dropout > 0.0) {
            if (dropped(mode, li, sid, f * spatial + p))
              g = 0.0;
            else
              g /= 1.0 - mode.dropout;
          }
          const double z = bn[li][idx];
          double pass;
          if (layer.amode == ActivationMode::noisy_relu)
            pass = activation_backward(z + noise_at(mode, li, sid, f * spatial + p), t_sat);
          else
            pass = activation_backward(z, t_sat);  // straight-through surrogate
          dact[idx] = g * pass;
        }
    }

    // Batch-norm backward; fixed-order sums per feature.
    run.dgamma[li].assign(d.out_c, 0.0);
    run.dbeta[li].assign(d.out_c, 0.0);
    std::vector<double> dconv(static_cast<std::size_t>(batch) * out_chw);
#pragma omp parallel for schedule(static)
    for (int f = 0; f < d.out_c; ++f) {
      const double inv = 1.0 / std::sqrt(var[li][f] + kBnEps);
      double s1 = 0.0, s2 = 0.0;
      for (int b = 0; b < batch; ++b)
        for (int p = 0; p < spatial; ++p) {
          const std::size_t idx = b * out_chw + f * spatial + p;
          const double xhat = (conv[li][idx] - mean[li][f]) * inv;
          s1 += dact[idx];
          s2 += dact[idx] * xhat;
        }
      run.dbeta[li][f] = s1;
      run.dgamma[li][f] = s2;
      const bool batch_stats = mode.train_stats;
      for (int b = 0; b < batch; ++b)
        for (int p = 0; p < spatial; ++p) {
          const std::size_t idx = b * out_chw + f * spatial + p;
          const double xhat = (conv[li][idx] - mean[li][f]) * inv;
          if (batch_stats)
            dconv[idx] =
                layer.gamma[f] * inv * (dact[idx] - s1 / count - xhat * s2 / count);
          else
            dconv[idx] = layer.gamma[f] * inv * dact[idx];
        }
    }

    // Convolution backward with per-sample weight buffers.
    const int ksize = layer.spec.patch * layer.spec.patch * layer.in_per_group();
    const int wsize = ksize * layer.spec.out_features;
    std::vector<double> dw_samples(static_cast<std::size_t>(batch) * wsize, 0.0);
    std::vector<double> din;
    if (li > 0) din.assign(static_cast<std::size_t>(batch) * in_chw, 0.0);
    const double* src = li == 0 ? input.data() : act[li - 1].data();
#pragma omp parallel for schedule(static)
    for (int b = 0; b < batch; ++b)
      conv_backward_sample(layer, d, src + b * in_chw, dconv.data() + b * out_chw,
                           li > 0 ? din.data() + b * in_chw : nullptr,
                           dw_samples.data() + static_cast<std::size_t>(b) * wsize);
    reduce_over_samples(dw_samples, batch, wsize);
    run.dweights[li].assign(dw_samples.begin(), dw_samples.begin() + wsize);
    if (li > 0) dact = std::move(din);
  }
  return run;
}

int total_epochs_for(const Schedule& sched, const ReplacementPlan& plan) {
  switch (plan.stage_limit) {
    case 1: return sched.replace_epoch.front();
    case 2: return sched.binarize_start;
    case 3: return sched.snap_epoch + 1;
    default: return sched.total_epochs;
  }
}

void check_dataset(const NetworkSpec& spec, const Dataset& data) {
  if (data.size() == 0) throw Error(ErrorCode::constraint, "dataset is empty");
  if (data.height != spec.in_h || data.width != spec.in_w ||
      data.channels != spec.in_c || data.num_classes != spec.num_classes)
    throw Error(ErrorCode::constraint, "dataset shape does not match the network");
}

}  // namespace

int Schedule::stage_of(int epoch) const {
  if (epoch < replace_epoch.front()) return 1;
  if (epoch < binarize_start) return 2;
  if (epoch < snap_epoch) return 3;
  return 4;
}

Schedule make_schedule(const ReplacementPlan& plan, int num_layers) {
  if (plan.warmup_epochs < 1 || plan.replace_gap < 1 || plan.threshold_gap < 1 ||
      plan.binarize_epochs < 0 || plan.finetune_epochs < 0)
    throw Error(ErrorCode::constraint, "invalid replacement plan");
  if (plan.stage_limit < 1 || plan.stage_limit > 4)
    throw Error(ErrorCode::constraint, "stage limit must be in 1..4");
  Schedule s;
  for (int k = 0; k < num_layers; ++k)
    s.replace_epoch.push_back(plan.warmup_epochs + k * plan.replace_gap);
  s.binarize_start = plan.warmup_epochs + num_layers * plan.replace_gap;
  s.snap_epoch = s.binarize_start + plan.binarize_epochs;
  for (int k = 0; k < num_layers; ++k)
    s.swap_epoch.push_back(s.snap_epoch + 1 + k * plan.threshold_gap);
  s.total_epochs = s.swap_epoch.back() + 1 + plan.finetune_epochs;
  s.anneal_span = s.snap_epoch;
  return s;
}

namespace {

void replace_layer(Network& net, int li, EpochMetrics& metrics) {
  Layer& layer = net.layers[li];
  layer.structure.clear();
  layer.mask.clear();
  layer.pattern.clear();
  double total_distance = 0.0;
  for (Kernel& w : layer.weights) {
    Kernel clipped = w;
    for (double& v : clipped.values) v = std::clamp(v, -1.0, 1.0);
    const ProjectionResult proj = project_exact(clipped);
    total_distance += proj.distance;
    layer.structure.push_back(SymmetricStructure{proj.spec.f, proj.spec.rho,
                                                 proj.spec.sigma1, proj.spec.sigma2});
    layer.mask.push_back(proj.spec.mask);
    Kernel pat(w.side, w.feats);
    for (int s = 0; s < w.feats; ++s) {
      const std::vector<int> labels =
          orbit_labels(proj.spec.sigma1, proj.spec.sigma2, proj.spec.rho[s], w.side);
      for (int i = 0; i < w.side; ++i)
        for (int j = 0; j < w.side; ++j)
          pat.at(i, j, s) = proj.spec.f(labels[i * w.side + j]);
    }
    layer.pattern.push_back(std::move(pat));
  }
  layer.wmode = WeightMode::relaxed_symmetric;
  refresh_materialized_weights(layer);
  metrics.events.push_back(EpochEvent{
      "replace", li, total_distance / static_cast<double>(layer.weights.size())});
}

}  // namespace

TrainResult train(const NetworkSpec& spec, const Dataset& data,
                  const Hyperparameters& hp, const ReplacementPlan& plan) {
  check_dataset(spec, data);
  if (hp.batch_size < 1 || hp.momentum < 0.0 || hp.momentum >= 1.0 ||
      hp.weight_decay < 0.0 || !(hp.dropout >= 0.0 && hp.dropout < 1.0))
    throw Error(ErrorCode::constraint, "invalid hyperparameters");

  Network net = build_network(spec, hp.seed);
  const int num_layers = static_cast<int>(net.layers.size());
  const Schedule sched = make_schedule(plan, num_layers);
  const int total = total_epochs_for(sched, plan);

  // Momentum state, flat per layer (weights or masks share the same shape).
  std::vector<std::vector<double>> vel_w(num_layers), vel_g(num_layers), vel_b(num_layers);
  for (int li = 0; li < num_layers; ++li) {
    const Layer& l = net.layers[li];
    const int ksize = l.spec.patch * l.spec.patch * l.in_per_group();
    vel_w[li].assign(static_cast<std::size_t>(ksize) * l.spec.out_features, 0.0);
    vel_g[li].assign(l.spec.out_features, 0.0);
    vel_b[li].assign(l.spec.out_features, 0.0);
  }

  TrainResult result;
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < total; ++epoch) {
    EpochMetrics em;
    em.epoch = epoch;
    em.stage = sched.stage_of(epoch);

    for (int li = 0; li < num_layers; ++li)
      if (epoch == sched.replace_epoch[li]) {
        replace_layer(net, li, em);
        std::fill(vel_w[li].begin(), vel_w[li].end(), 0.0);  // fresh state for B
      }
    if (epoch == sched.snap_epoch) {
      for (int li = 0; li < num_layers; ++li) {
        Layer& l = net.layers[li];
        if (l.wmode != WeightMode::relaxed_symmetric) continue;
        for (Kernel& b : l.mask) b = binarize_mask(b, 0.5);
        l.wmode = WeightMode::frozen_symmetric;
        refresh_materialized_weights(l);
      }
      em.events.push_back(EpochEvent{"snap", -1, 0.0});
    }
    for (int li = 0; li < num_layers; ++li)
      if (epoch == sched.swap_epoch[li] && plan.stage_limit >= 4) {
        net.layers[li].amode = ActivationMode::threshold;
        em.events.push_back(EpochEvent{"swap", li, 0.0});
      }

    em.epsilon = anneal(static_cast<double>(epoch) / std::max(1, sched.anneal_span),
                        spec.t, plan.anneal_shape);

    // Mask hardening coefficient during the binarize period.
    double harden = 0.0;
    if (plan.binarize_epochs > 0 && epoch >= sched.binarize_start &&
        epoch < sched.snap_epoch)
      harden = static_cast<double>(epoch - sched.binarize_start + 1) /
               plan.binarize_epochs * 0.5;

    // Deterministic shuffle.
    DetRng shuffle_rng(mix(hp.seed, mix(0x53485546ULL, static_cast<std::uint64_t>(epoch))));
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);

    double loss_sum = 0.0;
    long long seen = 0;
    const int batches =
        (static_cast<int>(data.size()) + hp.batch_size - 1) / hp.batch_size;
    for (int bi = 0; bi < batches; ++bi) {
      const int begin = bi * hp.batch_size;
      const int end = std::min<int>(begin + hp.batch_size, static_cast<int>(data.size()));
      std::vector<int> ids(order.begin() + begin, order.begin() + end);
      RunMode mode;
      mode.train_stats = true;
      mode.update_running = true;
      mode.epsilon = em.epsilon;
      mode.dropout = hp.dropout;
      mode.key = mix(hp.seed, mix(0x4e4f495345ULL,
                                  mix(static_cast<std::uint64_t>(epoch),
                                      static_cast<std::uint64_t>(bi))));
      BatchRun run = run_batch(net, data, ids, mode, true);
      loss_sum += run.loss_sum;
      seen += ids.size();

      const double inv_batch = 1.0 / static_cast<double>(ids.size());
      for (int li = 0; li < num_layers; ++li) {
        Layer& layer = net.layers[li];
        // gamma / beta
        for (int f = 0; f < layer.spec.out_features; ++f) {
          const double gg = run.dgamma[li][f] * inv_batch;
          vel_g[li][f] = hp.momentum * vel_g[li][f] - hp.learning_rate * gg;
          layer.gamma[f] += vel_g[li][f];
          const double gb = run.dbeta[li][f] * inv_batch;
          vel_b[li][f] = hp.momentum * vel_b[li][f] - hp.learning_rate * gb;
          layer.beta[f] += vel_b[li][f];
        }
        if (layer.wmode == WeightMode::frozen_symmetric) continue;
        const int ksize = layer.spec.patch * layer.spec.patch * layer.in_per_group();
        if (layer.wmode == WeightMode::unconstrained) {
          for (int oc = 0; oc < layer.spec.out_features; ++oc)
            for (int q = 0; q < ksize; ++q) {
              double& w = layer.weights[oc].values[q];
              const double g = run.dweights[li][oc * ksize + q] * inv_batch +
                               hp.weight_decay * w;
              double& v = vel_w[li][oc * ksize + q];
              v = hp.momentum * v - hp.learning_rate * g;
              w += v;
            }
        } else {  // relaxed: only the mask moves, boxed to [0,1]
          for (int oc = 0; oc < layer.spec.out_features; ++oc)
            for (int q = 0; q < ksize; ++q) {
              double& b = layer.mask[oc].values[q];
              const double gw = run.dweights[li][oc * ksize + q] * inv_batch;
              const double g = gw * layer.pattern[oc].values[q] + hp.weight_decay * b;
              double& v = vel_w[li][oc * ksize + q];
              v = hp.momentum * v - hp.learning_rate * g;
              b = std::clamp(b + v, 0.0, 1.0);
              if (harden > 0.0) b += harden * ((b >= 0.5 ? 1.0 : 0.0) - b);
            }
          refresh_materialized_weights(layer);
        }
      }
    }

    em.loss = loss_sum / static_cast<double>(seen);

    // Evaluation pass (running stats, no noise) for accuracy and sparsity.
    {
      RunMode eval_mode;
      std::vector<int> ids(data.size());
      std::iota(ids.begin(), ids.end(), 0);
      BatchRun run = run_batch(net, data, ids, eval_mode, false);
      em.accuracy = static_cast<double>(run.correct) / static_cast<double>(data.size());
      em.sparsity =
          static_cast<double>(run.act_nonzero) / static_cast<double>(run.act_total);
    }

    em.mask_min = 1.0;
    em.mask_max = 0.0;
    bool any_mask = false;
    for (const Layer& l : net.layers)
      for (const Kernel& b : l.mask)
        for (double v : b.values) {
          any_mask = true;
          em.mask_min = std::min(em.mask_min, v);
          em.mask_max = std::max(em.mask_max, v);
        }
    if (!any_mask) {
      em.mask_min = 0.0;
      em.mask_max = 1.0;
    }
    result.metrics.push_back(std::move(em));
  }

  result.net = std::move(net);
  return result;
}

double evaluate_accuracy(const Network& net, const Dataset& data) {
  check_dataset(net.spec, data);
  RunMode mode;  // eval: running stats, no noise, no dropout
  std::vector<int> ids(data.size());
  std::iota(ids.begin(), ids.end(), 0);
  BatchRun run = run_batch(const_cast<Network&>(net), data, ids, mode, false);
  return static_cast<double>(run.correct) / static_cast<double>(data.size());
}

double measure_sparsity(const Network& net, const Dataset& data) {
  for (const Layer& l : net.layers)
    if (l.amode != ActivationMode::threshold)
      throw Error(ErrorCode::constraint,
                  "sparsity is defined for fully threshold-mode networks");
  check_dataset(net.spec, data);
  RunMode mode;
  std::vector<int> ids(data.size());
  std::iota(ids.begin(), ids.end(), 0);
  BatchRun run = run_batch(const_cast<Network&>(net), data, ids, mode, false);
  return static_cast<double>(run.act_nonzero) / static_cast<double>(run.act_total);
}

std::vector<std::vector<double>> forward_traces(const Network& net,
                                                const std::vector<double>& image) {
  Dataset one;
  one.height = net.spec.in_h;
  one.width = net.spec.in_w;
  one.channels = net.spec.in_c;
  one.num_classes = net.spec.num_classes;
  one.images.push_back(image);
  one.labels.push_back(0);
  RunMode mode;
  std::vector<std::vector<double>> traces;
  run_batch(const_cast<Network&>(net), one, {0}, mode, false, &traces);
  return traces;
}

long long estimate_cores(const Network& net) {
  for (const Layer& l : net.layers)
    if (l.wmode != WeightMode::frozen_symmetric)
      throw Error(ErrorCode::constraint,
                  "core estimation requires every layer frozen-symmetric");
  const std::vector<LayerDims> dims = layer_dims(net.spec);
  long long cores = 0;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const LayerSpec& ls = net.layers[li].spec;
    const LayerDims& d = dims[li];
    const int m_g = ls.in_features / ls.groups;
    const int fout_g = ls.out_features / ls.groups;
    // Largest square input tile honoring both core limits.
    int tile = 0, out_tile = 0;
    for (int t = std::min(d.in_h, d.in_w); t >= ls.patch; --t) {
      if (t * t * m_g > 256) continue;
      const int ot = (t - ls.patch) / ls.stride + 1;
      if (ot * ot * fout_g > 256) continue;
      tile = t;
      out_tile = ot;
      break;
    }
    if (tile == 0)
      throw Error(ErrorCode::constraint, "layer cannot be tiled onto cores");
    const long long tiles_h = (d.out_h + out_tile - 1) / out_tile;
    const long long tiles_w = (d.out_w + out_tile - 1) / out_tile;
    cores += static_cast<long long>(ls.groups) * tiles_h * tiles_w;
  }
  return cores;
}

std::vector<double*> trainable_parameters(Network& net) {
  std::vector<double*> params;
  for (Layer& l : net.layers) {
    if (l.wmode == WeightMode::unconstrained)
      for (Kernel& w : l.weights)
        for (double& v : w.values) params.push_back(&v);
    else if (l.wmode == WeightMode::relaxed_symmetric)
      for (Kernel& b : l.mask)
        for (double& v : b.values) params.push_back(&v);
    for (double& v : l.gamma) params.push_back(&v);
    for (double& v : l.beta) params.push_back(&v);
  }
  return params;
}

namespace {

// The loss reads materialized weights; keep them in step with the masks so
// finite differences through mask entries are visible.
void sync_symmetric_layers(Network& net) {
  for (Layer& l : net.layers)
    if (l.wmode != WeightMode::unconstrained) refresh_materialized_weights(l);
}

}  // namespace

double batch_loss(const Network& net, const Dataset& data) {
  RunMode mode;
  mode.train_stats = true;  // batch statistics, but nothing is updated
  std::vector<int> ids(data.size());
  std::iota(ids.begin(), ids.end(), 0);
  Network& mutable_net = const_cast<Network&>(net);
  sync_symmetric_layers(mutable_net);
  BatchRun run = run_batch(mutable_net, data, ids, mode, false);
  return run.loss_sum / static_cast<double>(data.size());
}

std::vector<double> batch_gradients(const Network& net, const Dataset& data) {
  RunMode mode;
  mode.train_stats = true;
  std::vector<int> ids(data.size());
  std::iota(ids.begin(), ids.end(), 0);
  Network& mutable_net = const_cast<Network&>(net);
  sync_symmetric_layers(mutable_net);
  BatchRun run = run_batch(mutable_net, data, ids, mode, true);
  const double inv = 1.0 / static_cast<double>(data.size());
  std::vector<double> grads;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const Layer& l = net.layers[li];
    const int ksize = l.spec.patch * l.spec.patch * l.in_per_group();
    if (l.wmode == WeightMode::unconstrained) {
      for (double g : run.dweights[li]) grads.push_back(g * inv);
    } else if (l.wmode == WeightMode::relaxed_symmetric) {
      for (int oc = 0; oc < l.spec.out_features; ++oc)
        for (int q = 0; q < ksize; ++q)
          grads.push_back(run.dweights[li][oc * ksize + q] *
                          l.pattern[oc].values[q] * inv);
    }
    for (double g : run.dgamma[li]) grads.push_back(g * inv);
    for (double g : run.dbeta[li]) grads.push_back(g * inv);
  }
  return grads;
}

double min_kink_distance(const Network& net, const Dataset& data) {
  RunMode mode;
  mode.train_stats = true;
  std::vector<int> ids(data.size());
  std::iota(ids.begin(), ids.end(), 0);
  Network& mutable_net = const_cast<Network&>(net);
  BatchRun run = run_batch(mutable_net, data, ids, mode, false);
  return run.min_kink;
}

}  // namespace symkernel
