#pragma once

// Training objectives. Every loss accepts either one sample or a batch; for a
// batch the per-sample values are averaged over the leading axis.

#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "hpgan/config.hpp"
#include "hpgan/networks.hpp"
#include "hpgan/tensor.hpp"

namespace hpgan {

// Index of the smallest value; ties go to the lowest index.
std::size_t argmin_index(std::span<const double> values);

struct PruneResult {
  Tensor best;                         // winning reconstruction per row
  std::vector<Tensor> others;          // H-1 losing reconstructions per row
  std::vector<std::size_t> best_index;  // winning head per row
};

// Winner-take-all selection: per row, the conditioned hypothesis with the
// smallest squared L2 distance to x. `best` and `others` are gathered so that
// gradients reach only the heads that produced them. Records the winners in
// hyps.best_index. Throws ShapeError on an empty hypothesis list.
PruneResult prune(const Tensor& x, HypothesisSet& hyps);

// ||z - z_hat_best||^2
Tensor loss_enc(const Tensor& z, const Tensor& z_hat_best);
// |x - x_hat_best|_1 (sum over all 48 readings)
Tensor loss_gen(const Tensor& x, const Tensor& x_hat_best);
// KL(N(mean, exp(log_var)) || N(0, I)) = 1/2 sum(exp(lv) + mean^2 - 1 - lv)
Tensor loss_vb(const Tensor& mean, const Tensor& log_var);

struct AdversarialTerms {
  Tensor noise;    // ||D(x) - D(x_noise)||^2 on embeddings
  Tensor best;     // ||D(x) - D(x_best)||^2
  Tensor others;   // mean over others of ||D(x) - D(x_other)||^2; 0 with no others
  Tensor feature;  // mean over others of sum_l ||f_l(x) - f_l(x_other)||^2; 0 with no others
  Tensor total;    // noise + best + others + feature
};

AdversarialTerms loss_adv(const FeatureStack& d_x, const FeatureStack& d_noise, const FeatureStack& d_best,
                          std::span<const FeatureStack> d_others);

// Scalar values of every objective term for one step (or an epoch mean).
struct LossBreakdown {
  double enc = 0.0;
  double gen = 0.0;
  double adv_noise = 0.0;
  double adv_best = 0.0;
  double adv_others = 0.0;
  double adv_feature = 0.0;
  double adv_total = 0.0;
  std::optional<double> vb;
  double total = 0.0;

  bool operator==(const LossBreakdown&) const = default;
};

struct ObjectiveFlags {
  bool use_lm = true;
  bool use_vb = false;
};

// Fills adv_total and total from the component values:
//   adv_total = adv_noise + adv_best + adv_others + adv_feature
//   total     = w_enc*enc [if LM] + w_gen*gen + w_adv*adv_total + vb [if VB]
LossBreakdown summarize(LossBreakdown components, const LossWeights& weights, const ObjectiveFlags& flags);

struct LossTerms {
  Tensor enc;  // may be undefined when LM is off
  Tensor gen;
  AdversarialTerms adv;
  Tensor vb;  // undefined when VB is off
};

struct Objective {
  Tensor total;  // differentiable weighted sum
  LossBreakdown breakdown;
};

Objective total_loss(const LossTerms& terms, const LossWeights& weights, const ObjectiveFlags& flags);

// Discriminator's own objective:
//   -log(score_real) - mean_k log(1 - score_fake_k)
// with scores clamped to [1e-7, 1 - 1e-7]. The fakes should be computed from
// detached generator outputs.
Tensor discriminator_loss(const FeatureStack& d_real, std::span<const FeatureStack> d_fakes);

inline constexpr double kScoreClamp = 1e-7;

// CSV/JSON row helpers for the training trace.
std::string breakdown_csv_header();
std::string breakdown_csv_row(std::size_t epoch, const LossBreakdown& b);
nlohmann::json to_json(const LossBreakdown& b);

}  // namespace hpgan
