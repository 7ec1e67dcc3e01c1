#pragma once

#include <cstdint>
#include <vector>

#include "qusum/engine.hpp"

namespace qusum::sim {

enum class StraddlePolicy {
  pre,        // a block containing the change is processed as pre-change
  skip_block  // that block is dropped from the stream entirely
};

// Where the change lands in a stream of l-copy blocks. nu_copies is the
// 1-based index of the first post-change copy.
struct ChangePointScenario {
  int l = 1;
  std::vector<double> log_p, log_q;
  std::int64_t nu_copies = 1;
  StraddlePolicy policy = StraddlePolicy::pre;

  static ChangePointScenario from_copies(const povm::OutcomePair& pair,
                                         std::int64_t nu_copies,
                                         StraddlePolicy policy = StraddlePolicy::pre);
  // change aligned to a block boundary: nu = change_block * l + 1
  static ChangePointScenario aligned(const povm::OutcomePair& pair,
                                     std::int64_t change_block);

  bool straddles() const { return (nu_copies - 1) % l != 0; }
  // blocks the detector consumes before the first fully post-change block
  std::int64_t pre_blocks() const;
};

// Block outcome sequence of length `blocks` for one trial.
std::vector<std::int32_t> sample_stream(const ChangePointScenario& scenario,
                                        std::uint64_t seed, std::int64_t blocks);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t trials = 0;
  double censored_fraction = 0.0;
};

struct SimOptions {
  std::int64_t trials = 1000;
  std::int64_t cap = 10'000'000;  // block steps per trial
  std::uint64_t seed = 0;
  std::uint64_t stream_tag = 0;  // decorrelates estimators sharing a master seed
  int threads = 1;
};

// Mean time to false alarm, in blocks, under a pure pre-change stream.
// Censored trials contribute the cap, so the estimate is a lower bound
// whenever censored_fraction > 0.
MonteCarloEstimate estimate_false_alarm_time(const engine::LikelihoodModel& model,
                                             const engine::StoppingRule& rule,
                                             const SimOptions& opts);

struct DelayEstimate {
  MonteCarloEstimate blocks;  // first passage of the plain walk on pure post
  double copies_mean = 0.0;   // l * blocks + one block if the change straddles
  double copies_se = 0.0;
  double overshoot_mean = 0.0;  // over uncensored trials
  double overshoot_se = 0.0;
};

// Upper bound on the worst-case detection delay: the first-passage time of
// the cumulative log-likelihood walk started at 0 on a pure post-change
// stream (the single-test reduction of the detector). Its mean obeys
// Wald's identity (h + mean overshoot) / drift exactly. The scenario only
// contributes l and the straddle penalty.
DelayEstimate estimate_worst_delay(const engine::LikelihoodModel& model,
                                   const engine::StoppingRule& rule,
                                   const ChangePointScenario& scenario,
                                   const SimOptions& opts);

struct TradeoffPoint {
  int l = 1;
  double h = 0.0;
  MonteCarloEstimate t_fa;  // blocks
  DelayEstimate delay;
  double predicted_delay_copies = 0.0;  // l * h / E_q[z]
};

// One false-alarm and one delay estimate per threshold.
std::vector<TradeoffPoint> tradeoff_curve(const engine::LikelihoodModel& model,
                                          const ChangePointScenario& scenario,
                                          const std::vector<double>& h_list,
                                          const SimOptions& opts);

struct FamilyTradeoff {
  double h = 0.0;
  MonteCarloEstimate t_fa;             // family-level, blocks
  std::vector<DelayEstimate> delays;   // per member, true post = that member
};

FamilyTradeoff family_tradeoff(const std::vector<engine::LikelihoodModel>& models,
                               double h, int l, const SimOptions& opts);

}  // namespace qusum::sim
