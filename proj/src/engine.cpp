#include "qusum/engine.hpp"

#include <cmath>
#include <stdexcept>

#include "qusum/qmath.hpp"

namespace qusum::engine {

namespace {

double make_z(double lp, double lq) {
  const double ninf = -qmath::inf();
  if (lp == ninf && lq == ninf) return 0.0;
  if (lq == ninf) return -qmath::inf();
  if (lp == ninf) return qmath::inf();
  return lq - lp;
}

}  // namespace

LikelihoodModel::LikelihoodModel(std::vector<double> log_p, std::vector<double> log_q)
    : log_p_(std::move(log_p)), log_q_(std::move(log_q)) {
  if (log_p_.size() != log_q_.size() || log_p_.empty())
    throw std::invalid_argument("LikelihoodModel: log vectors must match and be nonempty");
  z_.reserve(log_p_.size());
  for (std::size_t i = 0; i < log_p_.size(); ++i) {
    if (std::isnan(log_p_[i]) || std::isnan(log_q_[i]) || log_p_[i] > 1e-9 || log_q_[i] > 1e-9)
      throw std::invalid_argument("LikelihoodModel: log-probabilities must be in [-inf, 0]");
    z_.push_back(make_z(log_p_[i], log_q_[i]));
  }
}

LikelihoodModel::LikelihoodModel(const povm::OutcomePair& pair)
    : LikelihoodModel(pair.log_p, pair.log_q) {}

double LikelihoodModel::increment(std::int32_t outcome) const {
  if (outcome < 0 || static_cast<std::size_t>(outcome) >= z_.size())
    throw std::out_of_range("LikelihoodModel: outcome index out of range");
  return z_[static_cast<std::size_t>(outcome)];
}

StoppingRule::StoppingRule(double threshold) : h(threshold) {
  if (!(threshold > 0) || !std::isfinite(threshold))
    throw std::invalid_argument("StoppingRule: threshold must be positive and finite");
}

double cusum_update(double w, double z) { return std::max(w + z, 0.0); }

StopResult run_until_stop(const LikelihoodModel& model, const StoppingRule& rule,
                          const std::function<std::optional<std::int32_t>()>& source,
                          std::int64_t cap) {
  if (cap < 1) throw std::invalid_argument("run_until_stop: cap must be at least 1");
  StopResult res;
  double w = 0.0;
  while (res.t < cap) {
    auto x = source();
    if (!x) {
      res.censored = true;
      return res;
    }
    w = cusum_update(w, model.increment(*x));
    ++res.t;
    if (w >= rule.h) {
      res.overshoot = w - rule.h;
      return res;
    }
  }
  res.censored = true;
  return res;
}

StopResult run_walk_until_stop(const LikelihoodModel& model, const StoppingRule& rule,
                               const std::function<std::optional<std::int32_t>()>& source,
                               std::int64_t cap) {
  if (cap < 1) throw std::invalid_argument("run_walk_until_stop: cap must be at least 1");
  StopResult res;
  double w = 0.0;
  while (res.t < cap) {
    auto x = source();
    if (!x) {
      res.censored = true;
      return res;
    }
    w += model.increment(*x);
    ++res.t;
    if (w >= rule.h) {
      res.overshoot = w - rule.h;
      return res;
    }
    if (w == -qmath::inf()) break;  // can never recover; run to censoring
  }
  res.censored = true;
  res.t = cap;
  return res;
}

double expected_increment(const LikelihoodModel& model,
                          const std::vector<double>& log_truth) {
  if (log_truth.size() != model.outcome_count())
    throw std::invalid_argument("expected_increment: outcome count mismatch");
  double acc = 0.0;
  const auto& z = model.increments();
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (log_truth[i] == -qmath::inf()) continue;  // zero weight, any z
    acc += std::exp(log_truth[i]) * z[i];
  }
  return acc;
}

double wald_delay_prediction(double h, const LikelihoodModel& model,
                             const std::vector<double>* log_truth) {
  if (!(h > 0)) throw std::domain_error("wald_delay_prediction: threshold must be positive");
  double drift = expected_increment(model, log_truth ? *log_truth : model.log_q());
  if (!std::isfinite(drift) || drift <= 0)
    throw std::domain_error("wald_delay_prediction: drift must be positive and finite");
  return h / drift;
}

double threshold_for_family(double target_mean_time, std::size_t size) {
  if (!(target_mean_time > 1) || !std::isfinite(target_mean_time))
    throw std::invalid_argument("threshold_for_family: target must exceed 1");
  if (size < 1) throw std::invalid_argument("threshold_for_family: empty family");
  return std::log(target_mean_time) + std::log(static_cast<double>(size));
}

void family_update(FamilyState& state, const std::vector<LikelihoodModel>& models,
                   std::int32_t outcome) {
  if (state.w.size() != models.size())
    throw std::invalid_argument("family_update: state size mismatch");
  for (std::size_t i = 0; i < models.size(); ++i)
    state.w[i] = cusum_update(state.w[i], models[i].increment(outcome));
}

std::optional<std::size_t> family_alarm(const FamilyState& state, double h) {
  for (std::size_t i = 0; i < state.w.size(); ++i)
    if (state.w[i] >= h) return i;
  return std::nullopt;
}

FamilyStopResult run_family_until_stop(
    const std::vector<LikelihoodModel>& models, const StoppingRule& rule,
    const std::function<std::optional<std::int32_t>()>& source, std::int64_t cap) {
  if (models.empty()) throw std::invalid_argument("run_family_until_stop: empty family");
  for (const auto& m : models) {
    if (m.outcome_count() != models.front().outcome_count())
      throw std::invalid_argument("run_family_until_stop: mismatched outcome sets");
    for (std::size_t i = 0; i < m.outcome_count(); ++i)
      if (std::abs(m.log_p()[i] - models.front().log_p()[i]) > 1e-12 &&
          !(m.log_p()[i] == models.front().log_p()[i]))
        throw std::invalid_argument("run_family_until_stop: members disagree on the pre law");
  }
  if (cap < 1) throw std::invalid_argument("run_family_until_stop: cap must be at least 1");
  FamilyStopResult res;
  FamilyState state;
  state.w.assign(models.size(), 0.0);
  while (res.t < cap) {
    auto x = source();
    if (!x) {
      res.censored = true;
      return res;
    }
    family_update(state, models, *x);
    ++res.t;
    if (auto hit = family_alarm(state, rule.h)) {
      res.member = static_cast<int>(*hit);
      res.overshoot = state.w[*hit] - rule.h;
      return res;
    }
  }
  res.censored = true;
  return res;
}

}  // namespace qusum::engine
