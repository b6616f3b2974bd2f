#include "hpgan/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "hpgan/error.hpp"
#include "hpgan/ops.hpp"

namespace hpgan {

namespace {

Tensor standard_normal(Shape shape, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor(std::move(shape), std::move(v));
}

void add_into(LossBreakdown& acc, const LossBreakdown& b, double w) {
  acc.enc += w * b.enc;
  acc.gen += w * b.gen;
  acc.adv_noise += w * b.adv_noise;
  acc.adv_best += w * b.adv_best;
  acc.adv_others += w * b.adv_others;
  acc.adv_feature += w * b.adv_feature;
  acc.adv_total += w * b.adv_total;
  if (b.vb) acc.vb = acc.vb.value_or(0.0) + w * *b.vb;
  acc.total += w * b.total;
}

}  // namespace

StepNoise draw_step_noise(const Models& models, std::size_t batch, Rng& rng) {
  const std::size_t latent = models.config.latent_dim;
  StepNoise n;
  n.z_noise = standard_normal({batch, latent}, rng);
  n.noise_head = std::uniform_int_distribution<std::size_t>(0, models.generator.n_heads() - 1)(rng);
  if (models.config.use_vb) n.vb_eps = standard_normal({batch, latent}, rng);
  return n;
}

GeneratorStep generator_objective(const Models& models, const Tensor& x, const StepNoise& noise) {
  const ModelConfig& cfg = models.config;
  if (x.rank() != 3) throw ShapeError("generator_objective expects a [B,2,24] batch");

  const EncoderOutput enc = models.encoder.forward(x);
  Tensor z = enc.mean;
  if (cfg.use_vb) {
    // Reparameterised draw: mean + exp(log_var / 2) * eps.
    z = ops::add(enc.mean, ops::mul(ops::exp(ops::scale(enc.log_var, 0.5)), noise.vb_eps));
  }

  GeneratorStep step;
  step.hyps = generate(models.generator, z, noise.z_noise, noise.noise_head);
  step.pruned = prune(x, step.hyps);

  LossTerms terms;
  terms.gen = loss_gen(x, step.pruned.best);
  if (cfg.use_lm) {
    // Latent matching compares the deterministic codes (means under VB).
    const EncoderOutput rec = models.encoder.forward(step.pruned.best);
    terms.enc = loss_enc(enc.mean, rec.mean);
  }
  if (cfg.use_vb) terms.vb = loss_vb(enc.mean, enc.log_var);

  const FeatureStack d_x = models.discriminator.forward(x);
  const FeatureStack d_noise = models.discriminator.forward(step.hyps.noise_sample);
  const FeatureStack d_best = models.discriminator.forward(step.pruned.best);
  std::vector<FeatureStack> d_others;
  d_others.reserve(step.pruned.others.size());
  for (const Tensor& o : step.pruned.others) d_others.push_back(models.discriminator.forward(o));
  terms.adv = loss_adv(d_x, d_noise, d_best, d_others);

  step.objective = total_loss(terms, cfg.loss_weights, {cfg.use_lm, cfg.use_vb});
  return step;
}

Tensor discriminator_objective(const Models& models, const Tensor& x, const HypothesisSet& hyps) {
  const FeatureStack real = models.discriminator.forward(x);
  std::vector<FeatureStack> fakes;
  fakes.reserve(hyps.conditioned.size() + 1);
  for (const Tensor& c : hyps.conditioned) fakes.push_back(models.discriminator.forward(c.detach()));
  fakes.push_back(models.discriminator.forward(hyps.noise_sample.detach()));
  return discriminator_loss(real, fakes);
}

TrainRun train(std::span<const Sample> train_set, const ModelConfig& config, const EpochCallback& on_epoch) {
  if (train_set.empty()) throw DataError("train: empty training set");
  const ModelConfig cfg = config.resolved();
  for (const Sample& s : train_set) {
    if (s.abnormal()) throw DataError("train: sample '" + s.id + "' is labelled abnormal");
    check_normalized(to_tensor(s));
  }

  const auto started = std::chrono::steady_clock::now();
  Rng rng(cfg.rng_seed);
  TrainRun run{cfg, {}, build_models(cfg, rng), 0.0, cfg.rng_seed};
  Models& m = run.models;
  auto eg_params = m.encoder_generator_parameters();
  auto d_params = m.discriminator_parameters();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const Sample*> batch;
  constexpr std::size_t kPlateauWindow = 50;
  constexpr double kPlateauTolerance = 1e-5;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    LossBreakdown epoch_mean;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(&train_set[order[i]]);
      const Tensor x = to_batch(std::span<const Sample* const>(batch));
      const StepNoise noise = draw_step_noise(m, batch.size(), rng);

      GeneratorStep step;
      Tensor d_loss;
      try {
        step = generator_objective(m, x, noise);
        d_loss = discriminator_objective(m, x, step.hyps);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch + 1) + ", batch at " + std::to_string(start) + ": " +
                           e.what());
      }
      if (!std::isfinite(step.objective.breakdown.total) || !std::isfinite(d_loss.item())) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1));
      }

      // Both gradients are taken at the current parameters; the generator
      // objective's backward also reaches the discriminator, so those
      // gradients are discarded before the discriminator's own backward.
      zero_grad(eg_params);
      zero_grad(d_params);
      backward(step.objective.total);
      zero_grad(d_params);
      backward(d_loss);
      adam_step(d_params, cfg.learning_rate);
      adam_step(eg_params, cfg.learning_rate);

      add_into(epoch_mean, step.objective.breakdown,
               static_cast<double>(batch.size()) / static_cast<double>(train_set.size()));
    }
    run.trace.push_back(epoch_mean);
    if (on_epoch) on_epoch(epoch + 1, epoch_mean);

    if (cfg.early_stop && run.trace.size() > kPlateauWindow) {
      const double before = run.trace[run.trace.size() - 1 - kPlateauWindow].total;
      const double now = run.trace.back().total;
      if ((before - now) / std::max(std::abs(before), 1e-12) < kPlateauTolerance) break;
    }
  }
  run.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return run;
}

void write_trace_csv(std::span<const LossBreakdown> trace, std::ostream& out) {
  out << breakdown_csv_header() << '\n';
  for (std::size_t i = 0; i < trace.size(); ++i) out << breakdown_csv_row(i + 1, trace[i]) << '\n';
}

void save_trace_csv(std::span<const LossBreakdown> trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_trace_csv(trace, out);
}

}  // namespace hpgan
