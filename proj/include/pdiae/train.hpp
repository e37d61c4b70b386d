#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "pdiae/model.hpp"

namespace pdiae {

// One training pair: input measurement and target, both on their base grids.
struct Sample {
  ComplexGrid input;
  ComplexGrid target;
};

struct TrainConfig {
  double lr0 = 1e-3;
  std::size_t batch = 5;
  std::size_t plateau_halve = 40;  // epochs without improvement before lr/2
  std::size_t plateau_stop = 100;  // epochs without improvement before halt
  double lambda = 1.0;             // augmentation weight
  std::vector<std::size_t> aug_grids;   // resolutions the interpolators target
  ResampleMethod aug_method = ResampleMethod::spectral;
  std::vector<std::size_t> eval_grids;  // protocol grids for relative error
  double beta1 = 0.9, beta2 = 0.999, eps_hat = 1e-8;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 1;

  void validate(std::size_t m) const {
    if (lr0 <= 0.0) throw Error("train: lr0 must be positive");
    if (lambda < 0.0) throw Error("train: lambda must be >= 0");
    if (batch < 1) throw Error("train: batch must be >= 1");
    if (plateau_halve >= plateau_stop)
      throw Error("train: plateau_halve must be below plateau_stop");
    if (eval_grids.empty()) throw Error("train: eval_grids must be nonempty");
    for (auto g : aug_grids)
      if (g < m)
        throw Error("train: augmentation grid " + std::to_string(g) +
                    " below retained modes m=" + std::to_string(m));
    for (auto g : eval_grids)
      if (g < m)
        throw Error("train: eval grid " + std::to_string(g) +
                    " below retained modes m=" + std::to_string(m));
  }
};

// ---- min-max normalization -----------------------------------------------------

// Stats come from the training split only; values outside that range simply
// leave [0,1] (clamping would destroy gradients and metrics).
inline void observe_range(const ComplexGrid& g, double& mn, double& mx) {
  for (double v : g.values.re.data) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  for (double v : g.values.im.data) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
}

inline NormStats compute_norm_stats(const std::vector<Sample>& train) {
  if (train.empty()) throw Error("compute_norm_stats: empty training split");
  NormStats st;
  st.in_min = st.out_min = std::numeric_limits<double>::infinity();
  st.in_max = st.out_max = -std::numeric_limits<double>::infinity();
  for (const Sample& s : train) {
    observe_range(s.input, st.in_min, st.in_max);
    observe_range(s.target, st.out_min, st.out_max);
  }
  return st;
}

// x -> (x - min) / (max - min), applied to re and im alike. Degenerate stats
// (max == min) pass a matching constant tensor through unchanged and reject
// anything else.
inline ComplexGrid normalize(const ComplexGrid& x, double mn, double mx) {
  if (mx == mn) {
    for (double v : x.values.re.data)
      if (v != mn)
        throw Error("normalize: degenerate stats (min == max == " +
                    std::to_string(mn) + ") with nonconstant data");
    for (double v : x.values.im.data)
      if (v != mn)
        throw Error("normalize: degenerate stats (min == max == " +
                    std::to_string(mn) + ") with nonconstant data");
    return x;
  }
  ComplexGrid out = x;
  const double inv = 1.0 / (mx - mn);
  for (auto& v : out.values.re.data) v = (v - mn) * inv;
  for (auto& v : out.values.im.data) v = (v - mn) * inv;
  return out;
}

inline ComplexGrid denormalize(const ComplexGrid& x, double mn, double mx) {
  if (mx == mn) return x;
  ComplexGrid out = x;
  for (auto& v : out.values.re.data) v = v * (mx - mn) + mn;
  for (auto& v : out.values.im.data) v = v * (mx - mn) + mn;
  return out;
}

// ---- loss -----------------------------------------------------------------------

// Mean squared error of one prediction against its target, as a tape node.
inline Var mse_term(Tape& t, const PdIaeModel& mdl, const Sample& s) {
  SigT in{s.input.sizes, cconstant(t, s.input.values)};
  SigT out = model_forward_t(t, mdl, in, s.target.sizes);
  CVar diff = csub(t, out.v, cconstant(t, s.target.values));
  return t.scale(csqnorm(t, diff), 1.0 / double(s.target.numel()));
}

// MSE on the batch plus lambda times MSE on the interpolated copies. The
// interpolator pair for the batch is one draw (aug_size for both input and
// output); samples must already be normalized.
inline Var augmented_loss(Tape& t, const PdIaeModel& mdl,
                          const std::vector<Sample>& batch, double lambda,
                          std::size_t aug_size, ResampleMethod method) {
  if (batch.empty()) throw Error("augmented_loss: empty batch");
  Var orig = -1;
  for (const Sample& s : batch) {
    Var term = mse_term(t, mdl, s);
    orig = orig < 0 ? term : t.add(orig, term);
  }
  orig = t.scale(orig, 1.0 / double(batch.size()));
  if (lambda == 0.0) return orig;

  Var aug = -1;
  for (const Sample& s : batch) {
    Sample r{resample(s.input, aug_size, method),
             resample(s.target, aug_size, method)};
    Var term = mse_term(t, mdl, r);
    aug = aug < 0 ? term : t.add(aug, term);
  }
  aug = t.scale(aug, 1.0 / double(batch.size()));
  return t.add(orig, t.scale(aug, lambda));
}

// ---- Adam -----------------------------------------------------------------------

struct AdamState {
  std::map<std::string, RealArray> m, v;
  std::uint64_t step = 0;
};

// Standard Adam with bias correction. A non-finite gradient aborts the step
// and reports it instead of poisoning the parameters.
inline bool adam_step(ParamStore& params, const Gradients& grads,
                      AdamState& state, double lr, double beta1 = 0.9,
                      double beta2 = 0.999, double eps_hat = 1e-8) {
  for (const auto& [name, g] : grads)
    if (!g.all_finite()) return false;

  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(beta2, double(state.step));
  for (auto& [name, slot] : params.slots) {
    const RealArray& g = grads.at(name);
    if (!state.m.count(name)) {
      state.m.emplace(name, RealArray(slot.shape));
      state.v.emplace(name, RealArray(slot.shape));
    }
    RealArray& m = state.m.at(name);
    RealArray& v = state.v.at(name);
    for (std::size_t i = 0; i < slot.numel(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      slot[i] -= lr * mhat / (std::sqrt(vhat) + eps_hat);
    }
  }
  return true;
}

// ---- evaluation -------------------------------------------------------------------

inline double relative_l2(const ComplexArray& truth, const ComplexArray& pred) {
  check_same_shape(truth.re, pred.re, "relative_l2");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < truth.numel(); ++i) {
    const double dr = truth.re[i] - pred.re[i];
    const double di = truth.im[i] - pred.im[i];
    num += dr * dr + di * di;
    den += truth.re[i] * truth.re[i] + truth.im[i] * truth.im[i];
  }
  if (den == 0.0) return -1.0;  // caller skips and counts
  return std::sqrt(num) / std::sqrt(den);
}

struct EvalResult {
  double avg = 0.0;
  std::vector<double> per_grid;  // aligned with the grid list
  std::size_t skipped = 0;       // zero-norm targets
  double mean_imag_magnitude = 0.0;  // diagnostic for real-valued targets
};

// The cross-resolution protocol: every sample is interpolated to every grid
// in the list, the model runs there, and relative errors are averaged.
inline EvalResult avg_relative_error(const PdIaeModel& mdl,
                                     const std::vector<Sample>& samples,
                                     const std::vector<std::size_t>& grids) {
  if (samples.empty() || grids.empty())
    throw Error("avg_relative_error: empty samples or grid list");
  EvalResult res;
  res.per_grid.assign(grids.size(), 0.0);
  std::vector<std::size_t> counts(grids.size(), 0);
  double imag_acc = 0.0;
  std::size_t imag_n = 0;
  for (std::size_t gi = 0; gi < grids.size(); ++gi) {
    const std::size_t s = grids[gi];
    for (const Sample& sample : samples) {
      const ComplexGrid fin = resample(sample.input, s, ResampleMethod::spectral);
      const ComplexGrid gt = resample(sample.target, s, ResampleMethod::spectral);
      const ComplexGrid fn = normalize(fin, mdl.stats.in_min, mdl.stats.in_max);
      const ComplexGrid raw = model_eval(mdl, fn, fn.sizes);
      const ComplexGrid pred =
          denormalize(raw, mdl.stats.out_min, mdl.stats.out_max);
      const double err = relative_l2(gt.values, pred.values);
      if (err < 0.0) {
        res.skipped += 1;
        continue;
      }
      res.per_grid[gi] += err;
      counts[gi] += 1;
      for (double v : pred.values.im.data) imag_acc += std::abs(v);
      imag_n += pred.numel();
    }
  }
  double total = 0.0;
  std::size_t groups = 0;
  for (std::size_t gi = 0; gi < grids.size(); ++gi) {
    if (counts[gi]) {
      res.per_grid[gi] /= double(counts[gi]);
      total += res.per_grid[gi];
      ++groups;
    }
  }
  res.avg = groups ? total / double(groups) : 0.0;
  res.mean_imag_magnitude = imag_n ? imag_acc / double(imag_n) : 0.0;
  return res;
}

// ---- training loop -----------------------------------------------------------------

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_rel_err = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_err = 0.0;
  std::size_t aborted_steps = 0;  // non-finite gradients encountered
};

// Adam with a fixed starting rate, halved after `plateau_halve` epochs
// without improvement and halted after `plateau_stop`; the best-by-test-error
// parameters are restored at the end. Improvement means strictly lower
// average relative error at 1e-12 resolution.
inline TrainResult train_loop(PdIaeModel& mdl, const std::vector<Sample>& train,
                              const std::vector<Sample>& test,
                              const TrainConfig& cfg) {
  cfg.validate(mdl.cfg.m);
  if (train.empty() || test.empty())
    throw Error("train_loop: empty train or test split");

  mdl.stats = compute_norm_stats(train);
  std::vector<Sample> ntrain;
  ntrain.reserve(train.size());
  for (const Sample& s : train)
    ntrain.push_back({normalize(s.input, mdl.stats.in_min, mdl.stats.in_max),
                      normalize(s.target, mdl.stats.out_min, mdl.stats.out_max)});

  Rng rng(cfg.seed);
  AdamState adam;
  TrainResult result;
  double lr = cfg.lr0;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0, last_halve_epoch = 0;
  std::map<std::string, RealArray> best_params = mdl.store.slots;

  std::vector<std::size_t> order(ntrain.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t at = 0; at < order.size(); at += cfg.batch) {
      std::vector<Sample> batch;
      for (std::size_t k = at; k < std::min(at + cfg.batch, order.size()); ++k)
        batch.push_back(ntrain[order[k]]);
      std::size_t aug_size = mdl.cfg.m;
      if (cfg.lambda > 0.0 && !cfg.aug_grids.empty()) {
        do {
          aug_size = cfg.aug_grids[rng.below(cfg.aug_grids.size())];
        } while (aug_size < mdl.cfg.m);
      }
      Tape t(&mdl.store);
      Var loss = augmented_loss(t, mdl, batch, cfg.lambda, aug_size,
                                cfg.aug_method);
      loss_sum += t.scalar_val(loss);
      ++batches;
      const Gradients grads = t.backprop(loss);
      if (!adam_step(mdl.store, grads, adam, lr, cfg.beta1, cfg.beta2,
                     cfg.eps_hat))
        result.aborted_steps += 1;
    }

    const EvalResult ev = avg_relative_error(mdl, test, cfg.eval_grids);
    result.log.push_back(
        {epoch, loss_sum / double(batches), ev.avg, lr});

    if (ev.avg < best - 1e-12) {
      best = ev.avg;
      best_epoch = epoch;
      best_params = mdl.store.slots;
    } else {
      if (epoch - best_epoch >= cfg.plateau_stop) break;
      if (epoch - std::max(best_epoch, last_halve_epoch) >= cfg.plateau_halve) {
        lr *= 0.5;
        last_halve_epoch = epoch;
      }
    }
  }

  mdl.store.slots = std::move(best_params);
  result.best_epoch = best_epoch;
  result.best_err = best;
  return result;
}

}  // namespace pdiae
