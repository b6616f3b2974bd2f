#include "hpgan/losses.hpp"

#include <cstdio>
#include <sstream>

#include "hpgan/error.hpp"
#include "hpgan/kernels.hpp"
#include "hpgan/ops.hpp"

namespace hpgan {

namespace {

// Squared L2 distance per sample, averaged when a batch axis is present.
Tensor sample_mean_sq_l2(const Tensor& a, const Tensor& b, std::size_t sample_rank) {
  if (a.rank() == sample_rank) return ops::sq_l2_distance(a, b);
  return ops::mean(ops::row_sq_l2_distance(a, b));
}

bool batched_stack(const FeatureStack& f) { return f.score.rank() == 1; }

}  // namespace

std::size_t argmin_index(std::span<const double> values) {
  if (values.empty()) throw ShapeError("argmin over an empty list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] < values[best]) best = i;
  return best;
}

PruneResult prune(const Tensor& x, HypothesisSet& hyps) {
  const auto& cands = hyps.conditioned;
  if (cands.empty()) throw ShapeError("prune: empty hypothesis list");
  for (const Tensor& c : cands) {
    if (c.shape() != x.shape()) {
      throw ShapeError("prune: hypothesis " + shape_str(c.shape()) + " vs input " + shape_str(x.shape()));
    }
  }
  const bool batched = x.rank() == 3;
  const std::size_t rows = batched ? x.dim(0) : 1;
  const std::size_t width = x.numel() / rows;
  const std::size_t heads = cands.size();

  PruneResult out;
  out.best_index.resize(rows);
  std::vector<double> dist(heads);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t h = 0; h < heads; ++h) {
      dist[h] = kernels::sq_diff_sum(x.data().data() + r * width, cands[h].data().data() + r * width, width);
    }
    out.best_index[r] = argmin_index(dist);
  }

  if (!batched) {
    const std::size_t best = out.best_index[0];
    out.best = cands[best];
    for (std::size_t h = 0; h < heads; ++h)
      if (h != best) out.others.push_back(cands[h]);
  } else {
    out.best = ops::select_rows(cands, out.best_index);
    std::vector<std::size_t> pick(rows);
    for (std::size_t k = 0; k + 1 < heads; ++k) {
      for (std::size_t r = 0; r < rows; ++r) pick[r] = k < out.best_index[r] ? k : k + 1;
      out.others.push_back(ops::select_rows(cands, pick));
    }
  }
  hyps.best_index = out.best_index;
  return out;
}

Tensor loss_enc(const Tensor& z, const Tensor& z_hat_best) {
  if (z.shape() != z_hat_best.shape()) {
    throw ShapeError("loss_enc: " + shape_str(z.shape()) + " vs " + shape_str(z_hat_best.shape()));
  }
  return sample_mean_sq_l2(z, z_hat_best, 1);
}

Tensor loss_gen(const Tensor& x, const Tensor& x_hat_best) {
  if (x.shape() != x_hat_best.shape()) {
    throw ShapeError("loss_gen: " + shape_str(x.shape()) + " vs " + shape_str(x_hat_best.shape()));
  }
  if (x.rank() == 3) return ops::mean(ops::row_l1_distance(x, x_hat_best));
  return ops::l1_distance(x, x_hat_best);
}

Tensor loss_vb(const Tensor& mean, const Tensor& log_var) {
  if (mean.shape() != log_var.shape()) {
    throw ShapeError("loss_vb: " + shape_str(mean.shape()) + " vs " + shape_str(log_var.shape()));
  }
  // exp(lv) + m^2 - 1 - lv, summed per sample
  Tensor term = ops::sub(ops::add(ops::exp(log_var), ops::mul(mean, mean)), ops::add_scalar(log_var, 1.0));
  Tensor per = mean.rank() == 2 ? ops::mean(ops::row_sum(term)) : ops::sum(term);
  return ops::scale(per, 0.5);
}

AdversarialTerms loss_adv(const FeatureStack& d_x, const FeatureStack& d_noise, const FeatureStack& d_best,
                          std::span<const FeatureStack> d_others) {
  const std::size_t emb_rank = batched_stack(d_x) ? 2 : 1;
  AdversarialTerms t;
  t.noise = sample_mean_sq_l2(d_x.embedding, d_noise.embedding, emb_rank);
  t.best = sample_mean_sq_l2(d_x.embedding, d_best.embedding, emb_rank);
  if (d_others.empty()) {
    t.others = Tensor::scalar(0.0);
    t.feature = Tensor::scalar(0.0);
  } else {
    const double inv = 1.0 / static_cast<double>(d_others.size());
    Tensor others_sum, feature_sum;
    for (const FeatureStack& o : d_others) {
      if (o.per_block.size() != d_x.per_block.size()) throw ShapeError("loss_adv: feature depth mismatch");
      Tensor e = sample_mean_sq_l2(d_x.embedding, o.embedding, emb_rank);
      others_sum = others_sum.defined() ? ops::add(others_sum, e) : e;
      for (std::size_t l = 0; l < o.per_block.size(); ++l) {
        const std::size_t rank = d_x.per_block[l].rank() - (emb_rank == 2 ? 1 : 0);
        Tensor f = sample_mean_sq_l2(d_x.per_block[l], o.per_block[l], rank);
        feature_sum = feature_sum.defined() ? ops::add(feature_sum, f) : f;
      }
    }
    t.others = ops::scale(others_sum, inv);
    t.feature = feature_sum.defined() ? ops::scale(feature_sum, inv) : Tensor::scalar(0.0);
  }
  t.total = ops::add(ops::add(t.noise, t.best), ops::add(t.others, t.feature));
  return t;
}

LossBreakdown summarize(LossBreakdown c, const LossWeights& w, const ObjectiveFlags& flags) {
  c.adv_total = c.adv_noise + c.adv_best + c.adv_others + c.adv_feature;
  c.total = w.w_gen * c.gen + w.w_adv * c.adv_total;
  if (flags.use_lm) c.total += w.w_enc * c.enc;
  if (flags.use_vb) {
    if (!c.vb) throw ConfigError("summarize: VB enabled but no vb term");
    c.total += *c.vb;
  } else {
    c.vb.reset();
  }
  return c;
}

Objective total_loss(const LossTerms& terms, const LossWeights& w, const ObjectiveFlags& flags) {
  Tensor total = ops::add(ops::scale(terms.gen, w.w_gen), ops::scale(terms.adv.total, w.w_adv));
  LossBreakdown c;
  c.gen = terms.gen.item();
  c.adv_noise = terms.adv.noise.item();
  c.adv_best = terms.adv.best.item();
  c.adv_others = terms.adv.others.item();
  c.adv_feature = terms.adv.feature.item();
  if (flags.use_lm) {
    if (!terms.enc.defined()) throw ConfigError("total_loss: LM enabled but no enc term");
    total = ops::add(total, ops::scale(terms.enc, w.w_enc));
  }
  if (terms.enc.defined()) c.enc = terms.enc.item();
  if (flags.use_vb) {
    if (!terms.vb.defined()) throw ConfigError("total_loss: VB enabled but no vb term");
    total = ops::add(total, terms.vb);
    c.vb = terms.vb.item();
  }
  return Objective{total, summarize(c, w, flags)};
}

Tensor discriminator_loss(const FeatureStack& d_real, std::span<const FeatureStack> d_fakes) {
  auto clamp = [](const Tensor& s) { return ops::clamp(s, kScoreClamp, 1.0 - kScoreClamp); };
  auto batch_mean = [](const Tensor& t) { return t.rank() == 0 ? t : ops::mean(t); };
  Tensor loss = ops::scale(batch_mean(ops::log(clamp(d_real.score))), -1.0);
  if (!d_fakes.empty()) {
    Tensor fake_sum;
    for (const FeatureStack& f : d_fakes) {
      Tensor one_minus = ops::add_scalar(ops::scale(clamp(f.score), -1.0), 1.0);
      Tensor term = batch_mean(ops::log(one_minus));
      fake_sum = fake_sum.defined() ? ops::add(fake_sum, term) : term;
    }
    loss = ops::sub(loss, ops::scale(fake_sum, 1.0 / static_cast<double>(d_fakes.size())));
  }
  return loss;
}

std::string breakdown_csv_header() {
  return "epoch,enc,gen,adv_noise,adv_best,adv_others,adv_feature,vb,total";
}

std::string breakdown_csv_row(std::size_t epoch, const LossBreakdown& b) {
  std::ostringstream os;
  os.precision(17);
  os << epoch << ',' << b.enc << ',' << b.gen << ',' << b.adv_noise << ',' << b.adv_best << ','
     << b.adv_others << ',' << b.adv_feature << ',';
  if (b.vb) os << *b.vb;
  os << ',' << b.total;
  return os.str();
}

nlohmann::json to_json(const LossBreakdown& b) {
  nlohmann::json j{{"enc", b.enc},
                   {"gen", b.gen},
                   {"adv_noise", b.adv_noise},
                   {"adv_best", b.adv_best},
                   {"adv_others", b.adv_others},
                   {"adv_feature", b.adv_feature},
                   {"adv_total", b.adv_total},
                   {"total", b.total}};
  j["vb"] = b.vb ? nlohmann::json(*b.vb) : nlohmann::json(nullptr);
  return j;
}

}  // namespace hpgan
