#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hpgan/data.hpp"
#include "hpgan/networks.hpp"

namespace hpgan {

// Decision boundary theta = mu + multiplier * sigma over training scores
// (sigma is the population standard deviation).
struct ThresholdModel {
  double mu = 0.0;
  double sigma = 0.0;
  double multiplier = 1.5;
  double theta = 0.0;

  // Same mu/sigma, new multiplier.
  ThresholdModel with_multiplier(double multiplier) const;
};

struct Verdict {
  std::string sample_id;
  double score = 0.0;
  double theta = 0.0;
  bool is_abnormal = false;
};

// Mean squared error between x ([2,24], normalised) and its best hypothesis.
// The noise branch plays no part at inference, so the score is deterministic.
double anomaly_score(const Models& models, const Tensor& x);
double anomaly_score(const Models& models, const Sample& normalized);
// Batched scoring; each element equals anomaly_score of the sample.
std::vector<double> anomaly_scores(const Models& models, std::span<const Sample> normalized);

ThresholdModel fit_threshold(std::span<const double> scores, double multiplier = 1.5);
ThresholdModel fit_threshold(const Models& models, std::span<const Sample> train_set, double multiplier = 1.5);

// Abnormal iff score >= theta.
Verdict classify(double score, const ThresholdModel& threshold);

// Scores and classifies every sample, preserving order. Errors are rethrown
// with the offending index and id.
std::vector<Verdict> detect_batch(const Models& models, const ThresholdModel& threshold,
                                  std::span<const Sample> normalized);

nlohmann::json to_json(const ThresholdModel& t);
ThresholdModel threshold_from_json(const nlohmann::json& j);

// sample_id,score,theta,is_abnormal
void write_verdicts_csv(std::span<const Verdict> verdicts, std::ostream& out);
nlohmann::json to_json(std::span<const Verdict> verdicts);

}  // namespace hpgan
