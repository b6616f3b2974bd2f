#include "hpgan/detection.hpp"

#include <cmath>
#include <ostream>

#include "hpgan/error.hpp"
#include "hpgan/kernels.hpp"
#include "hpgan/losses.hpp"

namespace hpgan {

namespace {

// Best-hypothesis MSE per row of a normalised [B,2,24] batch.
std::vector<double> score_batch(const Models& models, const Tensor& x) {
  NoGradGuard no_grad;
  const Tensor z = encode(models.encoder, x);
  const Tensor trunk = models.generator.trunk(z);
  std::vector<Tensor> heads;
  for (std::size_t h = 0; h < models.generator.n_heads(); ++h) heads.push_back(models.generator.head(trunk, h));

  const std::size_t rows = x.rank() == 3 ? x.dim(0) : 1;
  const std::size_t width = kChannels * kHours;
  std::vector<double> scores(rows);
  std::vector<double> dist(heads.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t h = 0; h < heads.size(); ++h) {
      dist[h] = kernels::sq_diff_sum(x.data().data() + r * width, heads[h].data().data() + r * width, width);
    }
    scores[r] = dist[argmin_index(dist)] / static_cast<double>(width);
  }
  return scores;
}

}  // namespace

ThresholdModel ThresholdModel::with_multiplier(double m) const {
  ThresholdModel t = *this;
  t.multiplier = m;
  t.theta = mu + m * sigma;
  return t;
}

double anomaly_score(const Models& models, const Tensor& x) {
  if (x.shape() != Shape{kChannels, kHours}) {
    throw ShapeError("anomaly_score expects a [2,24] sample, got " + shape_str(x.shape()));
  }
  return score_batch(models, x).front();
}

double anomaly_score(const Models& models, const Sample& normalized) {
  return anomaly_score(models, to_tensor(normalized));
}

std::vector<double> anomaly_scores(const Models& models, std::span<const Sample> normalized) {
  constexpr std::size_t kChunk = 64;
  std::vector<double> out;
  out.reserve(normalized.size());
  for (std::size_t start = 0; start < normalized.size(); start += kChunk) {
    const auto chunk = normalized.subspan(start, std::min(kChunk, normalized.size() - start));
    const auto scores = score_batch(models, to_batch(chunk));
    out.insert(out.end(), scores.begin(), scores.end());
  }
  return out;
}

ThresholdModel fit_threshold(std::span<const double> scores, double multiplier) {
  if (scores.empty()) throw DataError("fit_threshold: no training scores");
  if (!std::isfinite(multiplier)) throw ConfigError("fit_threshold: multiplier must be finite");
  for (double s : scores) {
    if (!std::isfinite(s)) throw NumericError("fit_threshold: non-finite training score");
  }
  double sum = 0.0;
  for (double s : scores) sum += s;
  const double n = static_cast<double>(scores.size());
  const double mu = sum / n;
  double ss = 0.0;
  for (double s : scores) ss += (s - mu) * (s - mu);
  ThresholdModel t;
  t.mu = mu;
  t.sigma = std::sqrt(ss / n);
  t.multiplier = multiplier;
  t.theta = t.mu + multiplier * t.sigma;
  return t;
}

ThresholdModel fit_threshold(const Models& models, std::span<const Sample> train_set, double multiplier) {
  if (train_set.empty()) throw DataError("fit_threshold: empty training set");
  const auto scores = anomaly_scores(models, train_set);
  return fit_threshold(scores, multiplier);
}

Verdict classify(double score, const ThresholdModel& threshold) {
  return Verdict{{}, score, threshold.theta, score >= threshold.theta};
}

std::vector<Verdict> detect_batch(const Models& models, const ThresholdModel& threshold,
                                  std::span<const Sample> normalized) {
  std::vector<Verdict> out;
  out.reserve(normalized.size());
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    try {
      check_normalized(to_tensor(normalized[i]));
    } catch (const Error& e) {
      throw DataError("sample " + std::to_string(i) + " ('" + normalized[i].id + "'): " + e.what());
    }
  }
  const auto scores = anomaly_scores(models, normalized);
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    Verdict v = classify(scores[i], threshold);
    v.sample_id = normalized[i].id;
    out.push_back(std::move(v));
  }
  return out;
}

nlohmann::json to_json(const ThresholdModel& t) {
  return {{"mu", t.mu}, {"sigma", t.sigma}, {"multiplier", t.multiplier}, {"theta", t.theta}};
}

ThresholdModel threshold_from_json(const nlohmann::json& j) {
  try {
    ThresholdModel t;
    t.mu = j.at("mu").get<double>();
    t.sigma = j.at("sigma").get<double>();
    t.multiplier = j.at("multiplier").get<double>();
    t.theta = j.at("theta").get<double>();
    if (t.sigma < 0.0) throw DataError("threshold sigma must be non-negative");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed threshold JSON: ") + e.what());
  }
}

void write_verdicts_csv(std::span<const Verdict> verdicts, std::ostream& out) {
  out << "sample_id,score,theta,is_abnormal\n";
  const auto old = out.precision(17);
  for (const Verdict& v : verdicts) {
    out << v.sample_id << ',' << v.score << ',' << v.theta << ',' << (v.is_abnormal ? "true" : "false") << '\n';
  }
  out.precision(old);
}

nlohmann::json to_json(std::span<const Verdict> verdicts) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Verdict& v : verdicts) {
    arr.push_back({{"sample_id", v.sample_id}, {"score", v.score}, {"theta", v.theta}, {"is_abnormal", v.is_abnormal}});
  }
  return arr;
}

}  // namespace hpgan
