#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "qusum/povm.hpp"

namespace qusum::engine {

// Per-outcome log-likelihood-ratio increments z = log q - log p.
//
// Outcomes impossible under the post distribution carry z = -inf, which
// resets the running statistic on contact (IEEE max does the right thing);
// outcomes impossible under both distributions carry z = 0; outcomes
// impossible only under the pre distribution carry z = +inf and trip the
// alarm immediately.
class LikelihoodModel {
 public:
  LikelihoodModel(std::vector<double> log_p, std::vector<double> log_q);
  explicit LikelihoodModel(const povm::OutcomePair& pair);

  std::size_t outcome_count() const { return z_.size(); }
  double increment(std::int32_t outcome) const;
  const std::vector<double>& increments() const { return z_; }
  const std::vector<double>& log_p() const { return log_p_; }
  const std::vector<double>& log_q() const { return log_q_; }

 private:
  std::vector<double> log_p_, log_q_, z_;
};

struct StoppingRule {
  double h;
  explicit StoppingRule(double threshold);
};

// w' = max(w + z, 0)
double cusum_update(double w, double z);

struct StopResult {
  std::int64_t t = 0;      // observations consumed when the alarm fired
  double overshoot = 0.0;  // w - h at the alarm, 0 when censored
  bool censored = false;   // cap reached or stream ended without an alarm
};

// Feeds the recursion from `source` until w >= h. A censored result has
// t equal to the number of observations actually consumed.
StopResult run_until_stop(const LikelihoodModel& model, const StoppingRule& rule,
                          const std::function<std::optional<std::int32_t>()>& source,
                          std::int64_t cap);

// First passage of the plain cumulative walk sum(z) >= h, no reflection.
// This is the open-ended-test stopping time whose mean obeys Wald's identity
// (h + E[overshoot]) / E[z] exactly; the reflected recursion above crosses
// earlier by the walk's expected running minimum.
StopResult run_walk_until_stop(const LikelihoodModel& model, const StoppingRule& rule,
                               const std::function<std::optional<std::int32_t>()>& source,
                               std::int64_t cap);

// E_truth[z] for a log-probability vector over the same outcome set.
double expected_increment(const LikelihoodModel& model,
                          const std::vector<double>& log_truth);

// First-order delay h / E_truth[z], no overshoot correction. The truth
// defaults to the model's own post distribution; a different truth gives
// the mis-specified prediction. Throws std::domain_error when the drift
// is not positive and finite.
double wald_delay_prediction(double h, const LikelihoodModel& model,
                             const std::vector<double>* log_truth = nullptr);

// Threshold delivering a mean-time-to-false-alarm guarantee simultaneously
// over `size` parallel statistics: log(target) + log(size).
double threshold_for_family(double target_mean_time, std::size_t size);

struct FamilyState {
  std::vector<double> w;
};

void family_update(FamilyState& state, const std::vector<LikelihoodModel>& models,
                   std::int32_t outcome);

// Smallest member index at or above the threshold, if any.
std::optional<std::size_t> family_alarm(const FamilyState& state, double h);

struct FamilyStopResult {
  std::int64_t t = 0;
  double overshoot = 0.0;
  int member = -1;  // which statistic fired; -1 when censored
  bool censored = false;
};

// All members consume the same observation stream; the models must share
// one outcome set (identical pre-change log-probabilities).
FamilyStopResult run_family_until_stop(
    const std::vector<LikelihoodModel>& models, const StoppingRule& rule,
    const std::function<std::optional<std::int32_t>()>& source, std::int64_t cap);

}  // namespace qusum::engine
