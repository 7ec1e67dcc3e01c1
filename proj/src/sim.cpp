#include "qusum/sim.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "qusum/rng.hpp"

namespace qusum::sim {

namespace {

std::vector<double> probs_from_logs(const std::vector<double>& logs) {
  std::vector<double> p;
  p.reserve(logs.size());
  for (double v : logs) p.push_back(std::exp(v));
  return p;
}

// Trials are identified by index and pre-seeded, so the schedule across
// threads cannot change any result.
void for_each_trial(std::int64_t trials, int threads,
                    const std::function<void(std::int64_t)>& body) {
  if (trials <= 0) throw std::invalid_argument("simulation needs at least one trial");
  int workers = static_cast<int>(std::max<std::int64_t>(1, std::min<std::int64_t>(threads, trials)));
  if (workers == 1) {
    for (std::int64_t i = 0; i < trials; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::int64_t i; (i = next.fetch_add(1)) < trials;) body(i);
    });
  for (auto& th : pool) th.join();
}

MonteCarloEstimate reduce_times(const std::vector<engine::StopResult>& res) {
  MonteCarloEstimate est;
  est.trials = static_cast<std::int64_t>(res.size());
  double sum = 0;
  std::int64_t censored = 0;
  for (const auto& r : res) {
    sum += static_cast<double>(r.t);
    censored += r.censored ? 1 : 0;
  }
  est.mean = sum / static_cast<double>(est.trials);
  double ss = 0;
  for (const auto& r : res) {
    double d = static_cast<double>(r.t) - est.mean;
    ss += d * d;
  }
  est.std_error = est.trials > 1
                      ? std::sqrt(ss / (static_cast<double>(est.trials) *
                                        static_cast<double>(est.trials - 1)))
                      : 0.0;
  est.censored_fraction = static_cast<double>(censored) / static_cast<double>(est.trials);
  return est;
}

constexpr std::uint64_t kFalseAlarmTag = 0x66616c61;  // distinct estimator streams
constexpr std::uint64_t kDelayTag = 0x64656c61;

}  // namespace

ChangePointScenario ChangePointScenario::from_copies(const povm::OutcomePair& pair,
                                                     std::int64_t nu_copies,
                                                     StraddlePolicy policy) {
  if (nu_copies < 1) throw std::invalid_argument("ChangePointScenario: nu_copies must be >= 1");
  ChangePointScenario s;
  s.l = pair.l;
  s.log_p = pair.log_p;
  s.log_q = pair.log_q;
  s.nu_copies = nu_copies;
  s.policy = policy;
  return s;
}

ChangePointScenario ChangePointScenario::aligned(const povm::OutcomePair& pair,
                                                 std::int64_t change_block) {
  if (change_block < 0) throw std::invalid_argument("ChangePointScenario: negative block");
  return from_copies(pair, change_block * pair.l + 1, StraddlePolicy::pre);
}

std::int64_t ChangePointScenario::pre_blocks() const {
  const std::int64_t pre_copies = nu_copies - 1;
  if (policy == StraddlePolicy::pre) return (pre_copies + l - 1) / l;
  return pre_copies / l;
}

std::vector<std::int32_t> sample_stream(const ChangePointScenario& scenario,
                                        std::uint64_t seed, std::int64_t blocks) {
  rng::Categorical pre(probs_from_logs(scenario.log_p));
  rng::Categorical post(probs_from_logs(scenario.log_q));
  std::mt19937_64 g(seed);
  std::vector<std::int32_t> out;
  out.reserve(static_cast<std::size_t>(blocks));
  const std::int64_t npre = scenario.pre_blocks();
  for (std::int64_t b = 0; b < blocks; ++b) out.push_back(b < npre ? pre(g) : post(g));
  return out;
}

MonteCarloEstimate estimate_false_alarm_time(const engine::LikelihoodModel& model,
                                             const engine::StoppingRule& rule,
                                             const SimOptions& opts) {
  rng::Categorical cat(probs_from_logs(model.log_p()));
  std::vector<engine::StopResult> res(static_cast<std::size_t>(opts.trials));
  for_each_trial(opts.trials, opts.threads, [&](std::int64_t i) {
    std::mt19937_64 g(rng::derive_seed(opts.seed, opts.stream_tag ^ kFalseAlarmTag,
                                       static_cast<std::uint64_t>(i)));
    auto src = [&]() -> std::optional<std::int32_t> { return cat(g); };
    res[static_cast<std::size_t>(i)] = engine::run_until_stop(model, rule, src, opts.cap);
  });
  return reduce_times(res);
}

DelayEstimate estimate_worst_delay(const engine::LikelihoodModel& model,
                                   const engine::StoppingRule& rule,
                                   const ChangePointScenario& scenario,
                                   const SimOptions& opts) {
  rng::Categorical cat(probs_from_logs(model.log_q()));
  std::vector<engine::StopResult> res(static_cast<std::size_t>(opts.trials));
  for_each_trial(opts.trials, opts.threads, [&](std::int64_t i) {
    std::mt19937_64 g(rng::derive_seed(opts.seed, opts.stream_tag ^ kDelayTag,
                                       static_cast<std::uint64_t>(i)));
    auto src = [&]() -> std::optional<std::int32_t> { return cat(g); };
    res[static_cast<std::size_t>(i)] = engine::run_walk_until_stop(model, rule, src, opts.cap);
  });
  DelayEstimate est;
  est.blocks = reduce_times(res);
  const double penalty = scenario.straddles() ? static_cast<double>(scenario.l) : 0.0;
  est.copies_mean = scenario.l * est.blocks.mean + penalty;
  est.copies_se = scenario.l * est.blocks.std_error;
  double sum = 0;
  std::int64_t n = 0;
  for (const auto& r : res)
    if (!r.censored) {
      sum += r.overshoot;
      ++n;
    }
  if (n > 0) {
    est.overshoot_mean = sum / static_cast<double>(n);
    double ss = 0;
    for (const auto& r : res)
      if (!r.censored) {
        double d = r.overshoot - est.overshoot_mean;
        ss += d * d;
      }
    est.overshoot_se =
        n > 1 ? std::sqrt(ss / (static_cast<double>(n) * static_cast<double>(n - 1))) : 0.0;
  }
  return est;
}

std::vector<TradeoffPoint> tradeoff_curve(const engine::LikelihoodModel& model,
                                          const ChangePointScenario& scenario,
                                          const std::vector<double>& h_list,
                                          const SimOptions& opts) {
  std::vector<TradeoffPoint> curve;
  curve.reserve(h_list.size());
  for (std::size_t k = 0; k < h_list.size(); ++k) {
    engine::StoppingRule rule(h_list[k]);
    SimOptions point = opts;
    point.stream_tag = opts.stream_tag + 0x100 * (k + 1);
    TradeoffPoint tp;
    tp.l = scenario.l;
    tp.h = rule.h;
    tp.t_fa = estimate_false_alarm_time(model, rule, point);
    tp.delay = estimate_worst_delay(model, rule, scenario, point);
    tp.predicted_delay_copies = scenario.l * engine::wald_delay_prediction(rule.h, model);
    curve.push_back(std::move(tp));
  }
  return curve;
}

FamilyTradeoff family_tradeoff(const std::vector<engine::LikelihoodModel>& models,
                               double h, int l, const SimOptions& opts) {
  if (models.empty()) throw std::invalid_argument("family_tradeoff: empty family");
  engine::StoppingRule rule(h);
  FamilyTradeoff out;
  out.h = h;

  rng::Categorical pre(probs_from_logs(models.front().log_p()));
  std::vector<engine::FamilyStopResult> fa(static_cast<std::size_t>(opts.trials));
  for_each_trial(opts.trials, opts.threads, [&](std::int64_t i) {
    std::mt19937_64 g(rng::derive_seed(opts.seed, opts.stream_tag ^ kFalseAlarmTag,
                                       static_cast<std::uint64_t>(i)));
    auto src = [&]() -> std::optional<std::int32_t> { return pre(g); };
    fa[static_cast<std::size_t>(i)] = engine::run_family_until_stop(models, rule, src, opts.cap);
  });
  std::vector<engine::StopResult> flat(fa.size());
  for (std::size_t i = 0; i < fa.size(); ++i)
    flat[i] = {fa[i].t, fa[i].overshoot, fa[i].censored};
  out.t_fa = reduce_times(flat);

  for (std::size_t m = 0; m < models.size(); ++m) {
    ChangePointScenario sc;
    sc.l = l;
    sc.log_p = models[m].log_p();
    sc.log_q = models[m].log_q();
    sc.nu_copies = 1;
    SimOptions per = opts;
    per.stream_tag = opts.stream_tag + 0x10000 * (m + 1);
    out.delays.push_back(estimate_worst_delay(models[m], rule, sc, per));
  }
  return out;
}

}  // namespace qusum::sim
