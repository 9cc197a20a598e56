#include "symkernel/projection.hpp"

#include <cmath>

#include "symkernel/detrng.hpp"
#include "symkernel/error.hpp"

namespace symkernel {

namespace {

// Residual of one entry under the box-constrained mask optimum.
inline double entry_residual(double v, double p) {
  if (p == 0.0) return v * v;
  const double q = v / p;
  if (q <= 0.0) return v * v;
  if (q >= 1.0) {
    const double d = v - p;
    return d * d;
  }
  const double d = v - q * p;
  return d * d;
}

inline double entry_mask(double v, double p) {
  if (p == 0.0) return 0.0;
  const double q = v / p;
  if (q <= 0.0) return 0.0;
  if (q >= 1.0) return 1.0;
  return q;
}

// Squared residual of slice k for one (pair, f, rho) choice.
double slice_cost(const Kernel& k, int slice, const std::vector<int>& labels,
                  const StrengthFunction& f) {
  const int l = k.side;
  double acc = 0.0;
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < l; ++j)
      acc += entry_residual(k.at(i, j, slice), f(labels[i * l + j]));
  return acc;
}

struct LabelCache {
  // labels[pair][rho-1]: row-major l x l label matrix
  std::vector<std::array<std::vector<int>, 4>> labels;

  LabelCache(int l) {
    const auto& pairs = enumerate_commuting_pairs();
    labels.resize(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p)
      for (int rho = 1; rho <= 4; ++rho)
        labels[p][rho - 1] = orbit_labels(pairs[p].first, pairs[p].second, rho, l);
  }
};

ProjectionResult finish(const Kernel& k, std::size_t pair_idx, const StrengthFunction& f,
                        const std::vector<int>& rho, long long candidates,
                        std::vector<double> iteration_distances = {}) {
  const auto& pair = enumerate_commuting_pairs()[pair_idx];
  const int l = k.side;
  SymmetricKernelSpec spec{f, rho, pair.first, pair.second, Kernel(l, k.feats)};
  for (int s = 0; s < k.feats; ++s) {
    const std::vector<int> labels = orbit_labels(pair.first, pair.second, rho[s], l);
    for (int i = 0; i < l; ++i)
      for (int j = 0; j < l; ++j)
        spec.mask.at(i, j, s) = entry_mask(k.at(i, j, s), f(labels[i * l + j]));
  }
  ProjectionResult result;
  result.spec = spec;
  result.distance = frobenius_distance(k, materialize(spec));  // from scratch
  result.candidates_examined = candidates;
  result.iteration_distances = std::move(iteration_distances);
  return result;
}

struct Candidate {
  double cost2 = 0.0;
  long long index = -1;  // (pair-major, f-minor); total order for ties
  std::vector<int> rho;

  bool better_than(const Candidate& o) const {
    if (o.index < 0) return true;
    if (cost2 != o.cost2) return cost2 < o.cost2;
    return index < o.index;
  }
};

// Cost of combo (pair, f) with per-slice seeds chosen freely.
Candidate eval_combo(const Kernel& k, const LabelCache& cache, std::size_t pair_idx,
                     const StrengthFunction& f, long long index) {
  Candidate c;
  c.index = index;
  c.rho.resize(k.feats);
  for (int s = 0; s < k.feats; ++s) {
    double best = 0.0;
    int best_rho = 0;
    for (int rho = 1; rho <= 4; ++rho) {
      const double cost = slice_cost(k, s, cache.labels[pair_idx][rho - 1], f);
      if (best_rho == 0 || cost < best) {
        best = cost;
        best_rho = rho;
      }
    }
    c.cost2 += best;
    c.rho[s] = best_rho;
  }
  return c;
}

void check_inputs(const Kernel& k, const std::vector<StrengthFunction>& f_choices) {
  if (k.side < 1) throw Error(ErrorCode::constraint, "kernel side must be >= 1");
  if (f_choices.empty()) throw Error(ErrorCode::constraint, "empty strength-function set");
  for (const StrengthFunction& f : f_choices)
    if (!f.in_range())
      throw Error(ErrorCode::constraint, "strength values must lie in [-255,255]");
}

ProjectionResult project_exact_impl(const Kernel& k,
                                    const std::vector<StrengthFunction>& f_choices,
                                    bool parallel) {
  check_inputs(k, f_choices);
  const LabelCache cache(k.side);
  const long long num_pairs = static_cast<long long>(enumerate_commuting_pairs().size());
  const long long num_f = static_cast<long long>(f_choices.size());
  const long long combos = num_pairs * num_f;

  Candidate best;
  if (parallel) {
#pragma omp parallel
    {
      Candidate local;
#pragma omp for schedule(static) nowait
      for (long long idx = 0; idx < combos; ++idx) {
        Candidate c = eval_combo(k, cache, static_cast<std::size_t>(idx / num_f),
                                 f_choices[static_cast<std::size_t>(idx % num_f)], idx);
        if (c.better_than(local)) local = std::move(c);
      }
#pragma omp critical
      if (local.better_than(best)) best = std::move(local);
    }
  } else {
    for (long long idx = 0; idx < combos; ++idx) {
      Candidate c = eval_combo(k, cache, static_cast<std::size_t>(idx / num_f),
                               f_choices[static_cast<std::size_t>(idx % num_f)], idx);
      if (c.better_than(best)) best = std::move(c);
    }
  }

  return finish(k, static_cast<std::size_t>(best.index / num_f),
                f_choices[static_cast<std::size_t>(best.index % num_f)], best.rho,
                combos * 4 * k.feats);
}

}  // namespace

Kernel optimal_mask(const Kernel& k, const Kernel& pattern) {
  if (k.side != pattern.side || k.feats != pattern.feats)
    throw Error(ErrorCode::constraint, "kernel and pattern shapes differ");
  Kernel mask(k.side, k.feats);
  for (std::size_t p = 0; p < k.values.size(); ++p)
    mask.values[p] = entry_mask(k.values[p], pattern.values[p]);
  return mask;
}

ProjectionResult project_exact(const Kernel& k,
                               const std::vector<StrengthFunction>& f_choices) {
  return project_exact_impl(k, f_choices, true);
}

ProjectionResult project_exact(const Kernel& k) {
  return project_exact_impl(k, ternary_tables(), true);
}

ProjectionResult project_exact_serial(const Kernel& k,
                                      const std::vector<StrengthFunction>& f_choices) {
  return project_exact_impl(k, f_choices, false);
}

namespace {

// Closed-form strength table given fixed labels: each label's value is
// chosen independently; restricted sets are handled by the caller falling
// back to enumeration.
StrengthFunction closed_form_table(const Kernel& k, const LabelCache& cache,
                                   std::size_t pair_idx, const std::vector<int>& rho) {
  const int l = k.side;
  StrengthFunction f;
  for (int label = 1; label <= 4; ++label) {
    double cost_pos = 0.0, cost_neg = 0.0;
    for (int s = 0; s < k.feats; ++s) {
      const auto& labels = cache.labels[pair_idx][rho[s] - 1];
      for (int i = 0; i < l; ++i)
        for (int j = 0; j < l; ++j)
          if (labels[i * l + j] == label) {
            const double v = k.at(i, j, s);
            cost_pos += entry_residual(v, 1.0);
            cost_neg += entry_residual(v, -1.0);
          }
    }
    f.table[label - 1] = cost_neg < cost_pos ? -1 : 1;
  }
  return f;
}

bool is_full_ternary_set(const std::vector<StrengthFunction>& f_choices) {
  return f_choices == ternary_tables();
}

double state_cost(const Kernel& k, const LabelCache& cache, std::size_t pair_idx,
                  const StrengthFunction& f, const std::vector<int>& rho) {
  double acc = 0.0;
  for (int s = 0; s < k.feats; ++s)
    acc += slice_cost(k, s, cache.labels[pair_idx][rho[s] - 1], f);
  return acc;
}

}  // namespace

ProjectionResult project_alternating(const Kernel& k,
                                     const std::vector<StrengthFunction>& f_choices,
                                     int max_iters, std::uint64_t seed) {
  check_inputs(k, f_choices);
  if (max_iters < 1) throw Error(ErrorCode::constraint, "max_iters must be >= 1");
  const LabelCache cache(k.side);
  const auto& pairs = enumerate_commuting_pairs();
  const bool free_tables = is_full_ternary_set(f_choices);
  long long examined = 0;

  DetRng rng(seed);
  std::size_t pair_idx = static_cast<std::size_t>(rng.uniform_int(0, 119));
  std::vector<int> rho(k.feats, 1);
  StrengthFunction f = f_choices.front();

  // Best table for the current structure; closed form when the full ternary
  // set is allowed, enumeration otherwise.
  auto fit_table = [&](std::size_t p, const std::vector<int>& r) {
    if (free_tables) {
      examined += k.feats;
      return closed_form_table(k, cache, p, r);
    }
    StrengthFunction best = f_choices.front();
    double best_cost = 0.0;
    bool first = true;
    for (const StrengthFunction& cand : f_choices) {
      const double c = state_cost(k, cache, p, cand, r);
      examined += k.feats;
      if (first || c < best_cost) {
        best = cand;
        best_cost = c;
        first = false;
      }
    }
    return best;
  };

  f = fit_table(pair_idx, rho);
  double cost = state_cost(k, cache, pair_idx, f, rho);

  std::vector<double> iteration_distances;
  for (int iter = 0; iter < max_iters; ++iter) {
    const std::size_t prev_pair = pair_idx;
    const std::vector<int> prev_rho = rho;
    const StrengthFunction prev_f = f;

    // Structure sweep: every commuting pair with a constant seed vector and
    // the table re-fit per candidate. Incumbent kept unless improved.
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      for (int rc = 1; rc <= 4; ++rc) {
        const std::vector<int> cand_rho(k.feats, rc);
        const StrengthFunction cand_f = fit_table(p, cand_rho);
        const double c = state_cost(k, cache, p, cand_f, cand_rho);
        examined += k.feats;
        if (c < cost) {
          cost = c;
          pair_idx = p;
          rho = cand_rho;
          f = cand_f;
        }
      }
    }

    // Refinement at the held pair: per-slice seeds, then the table.
    for (int s = 0; s < k.feats; ++s) {
      for (int rc = 1; rc <= 4; ++rc) {
        std::vector<int> cand_rho = rho;
        cand_rho[s] = rc;
        const double c = state_cost(k, cache, pair_idx, f, cand_rho);
        ++examined;
        if (c < cost) {
          cost = c;
          rho = cand_rho;
        }
      }
    }
    const StrengthFunction cand_f = fit_table(pair_idx, rho);
    const double c = state_cost(k, cache, pair_idx, cand_f, rho);
    if (c < cost) {
      cost = c;
      f = cand_f;
    }

    iteration_distances.push_back(std::sqrt(cost));
    if (pair_idx == prev_pair && rho == prev_rho && f == prev_f) break;
  }

  return finish(k, pair_idx, f, rho, examined, std::move(iteration_distances));
}

Kernel binarize_mask(const Kernel& mask, double threshold) {
  for (double b : mask.values)
    if (!(b >= 0.0 && b <= 1.0))
      throw Error(ErrorCode::constraint, "mask entries must lie in [0,1]");
  Kernel out(mask.side, mask.feats);
  for (std::size_t p = 0; p < mask.values.size(); ++p)
    out.values[p] = mask.values[p] >= threshold ? 1.0 : 0.0;
  return out;
}

double frobenius_distance(const Kernel& a, const Kernel& b) {
  if (a.side != b.side || a.feats != b.feats)
    throw Error(ErrorCode::constraint, "kernel shapes differ");
  double acc = 0.0;
  for (std::size_t p = 0; p < a.values.size(); ++p) {
    const double d = a.values[p] - b.values[p];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace symkernel
