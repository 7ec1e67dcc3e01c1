#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qusum/cli.hpp"
#include "qusum/rng.hpp"
#include "qusum/sim.hpp"

namespace qusum::cli {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

OutputRecord write_csv(const std::string& out_dir, const std::string& name,
                       const std::string& content) {
  const auto path = std::filesystem::path(out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  out.close();
  return {name, sha256_hex(content), content.size()};
}

qmath::DensityMatrix qubit_state(double r, double theta) {
  if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("Bloch length must be in [0, 1]");
  if (!std::isfinite(theta)) throw ConfigError("theta must be finite");
  qmath::Matrix m(2, 2);
  const double x = r * std::sin(theta), z = r * std::cos(theta);
  m << (1 + z) / 2, x / 2, x / 2, (1 - z) / 2;
  return qmath::DensityMatrix(m);
}

double require_bias(const Config& cfg, const std::string& key) {
  double b = cfg.require_double(key);
  if (!(b > 0.0 && b < 1.0)) throw ConfigError("key '" + key + "': bias must be in (0, 1)");
  return b;
}

int require_block_length(std::int64_t l) {
  if (l < 1 || l > 64) throw ConfigError("block length must be in [1, 64]");
  return static_cast<int>(l);
}

sim::SimOptions sim_options(const Config& cfg) {
  sim::SimOptions opts;
  opts.trials = cfg.get_int("trials", 1000);
  opts.cap = cfg.get_int("cap", 10'000'000);
  opts.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  opts.threads = static_cast<int>(cfg.get_int("threads", 1));
  if (opts.trials < 1) throw ConfigError("trials must be at least 1");
  if (opts.cap < 1) throw ConfigError("cap must be at least 1");
  if (opts.threads < 1) throw ConfigError("threads must be at least 1");
  return opts;
}

povm::BlockMeasurement build_measurement(const std::string& kind,
                                         const schur::BlockDecomposition& pre,
                                         const schur::BlockDecomposition& post) {
  if (kind == "hayashi") return povm::hayashi_measurement(pre.l);
  if (kind == "optimized") return povm::optimize_angles(pre, post);
  throw ConfigError("measurement must be 'hayashi' or 'optimized', got '" + kind + "'");
}

void append_tradeoff_rows(std::ostringstream& csv, const std::string& scenario_id,
                          const std::vector<sim::TradeoffPoint>& curve) {
  for (const auto& tp : curve) {
    csv << scenario_id << ',' << tp.l << ',' << fmt(tp.h) << ',' << fmt(tp.t_fa.mean) << ','
        << fmt(tp.t_fa.std_error) << ',' << fmt(tp.delay.copies_mean) << ','
        << fmt(tp.delay.copies_se) << ',' << fmt(tp.delay.overshoot_mean) << ','
        << fmt(tp.predicted_delay_copies) << ','
        << fmt(std::max(tp.t_fa.censored_fraction, tp.delay.blocks.censored_fraction))
        << '\n';
  }
}

void enforce_censoring(const std::vector<sim::TradeoffPoint>& curve, double tolerance) {
  for (const auto& tp : curve) {
    double worst = std::max(tp.t_fa.censored_fraction, tp.delay.blocks.censored_fraction);
    if (worst > tolerance)
      throw CensoringExceeded("h=" + fmt(tp.h) + ": censored fraction " + fmt(worst) +
                              " exceeds tolerance " + fmt(tolerance));
  }
}

}  // namespace

int cmd_divergences(const Config& cfg) {
  const std::string out_dir = resolve_out_dir(cfg);
  const double r0 = cfg.require_double("r0");
  const double r1 = cfg.require_double("r1");
  const double theta = cfg.get_double("theta", 0.0);
  auto rho = qubit_state(r0, 0.0);
  auto sigma = qubit_state(r1, theta);
  auto alphas = cfg.get_double_list("alpha_list", {0.5, 1.5, 2.0});
  auto epss = cfg.get_double_list("eps_list", {0.0, 0.1, 0.3});

  std::ostringstream csv;
  csv << "quantity,parameter,value,unit\n";
  csv << "relative_entropy,," << fmt(qmath::quantum_relative_entropy(sigma, rho)) << ",nats\n";
  csv << "max_relative_entropy,," << fmt(qmath::max_relative_entropy(sigma, rho)) << ",bits\n";
  try {
    for (double a : alphas)
      csv << "petz_renyi," << fmt(a) << ','
          << fmt(qmath::renyi_relative_entropy(sigma, rho, a)) << ",nats\n";
    for (double a : alphas)
      csv << "sandwiched_renyi," << fmt(a) << ','
          << fmt(qmath::sandwiched_renyi(sigma, rho, a)) << ",nats\n";
    for (double e : epss)
      csv << "hypothesis_testing," << fmt(e) << ','
          << fmt(qmath::hypothesis_testing_relative_entropy(sigma, rho, e)) << ",nats\n";
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("invalid divergence parameter: ") + e.what());
  }

  std::vector<OutputRecord> outputs{write_csv(out_dir, "divergences.csv", csv.str())};
  write_manifest(out_dir, "divergences", cfg, outputs);
  return kExitOk;
}

int cmd_block_rate(const Config& cfg) {
  const std::string out_dir = resolve_out_dir(cfg);
  const double r0 = cfg.require_double("r0");
  const double r1 = cfg.require_double("r1");
  const double theta = cfg.require_double("theta");
  auto rho = qubit_state(r0, 0.0);
  auto sigma = qubit_state(r1, theta);
  const double d1 = qmath::quantum_relative_entropy(sigma, rho);
  auto l_list = cfg.get_int_list("l_list", {1, 2, 3, 4, 5});

  std::ostringstream csv;
  csv << "l,rate_hayashi,rate_optimized,rate_variational,quantum_relative_entropy,"
         "hayashi_lower_bound\n";
  for (std::int64_t lv : l_list) {
    const int l = require_block_length(lv);
    auto pre = schur::block_state(r0, l);
    auto post = schur::rotated_block_state(r1, theta, l);
    const double hay = povm::measured_rate(pre, post, povm::hayashi_measurement(l));
    const double opt = povm::measured_rate(pre, post, povm::optimize_angles(pre, post));
    auto var = povm::variational_measured_entropy(pre, post);
    if (!var.converged)
      throw VariationalNonConvergence("l=" + std::to_string(l) + ": gradient norm " +
                                      fmt(var.grad_norm) + " after " +
                                      std::to_string(var.iterations) + " iterations");
    csv << l << ',' << fmt(hay) << ',' << fmt(opt) << ',' << fmt(var.value / l) << ','
        << fmt(d1) << ',' << fmt(d1 - std::log(static_cast<double>(l) + 1) / l) << '\n';
  }

  std::vector<OutputRecord> outputs{write_csv(out_dir, "block_rate.csv", csv.str())};
  write_manifest(out_dir, "block-rate", cfg, outputs);
  return kExitOk;
}

int cmd_simulate(const Config& cfg) {
  const std::string out_dir = resolve_out_dir(cfg);
  const std::string mode = cfg.get_string("mode", "quantum");
  const double censor_tolerance = cfg.get_double("censor_tolerance", 1.0);
  auto h_list = cfg.get_double_list("h_list", {2.0, 4.0});
  sim::SimOptions opts = sim_options(cfg);

  std::ostringstream csv;
  csv << "scenario_id,l,h,t_fa_mean,t_fa_se,delay_mean,delay_se,overshoot_mean,"
         "predicted_delay,censored_fraction\n";
  std::vector<OutputRecord> outputs;
  std::vector<sim::TradeoffPoint> all_points;

  if (mode == "classical") {
    const double pb = require_bias(cfg, "p_bias");
    const double qb = require_bias(cfg, "q_bias");
    std::vector<double> log_p{std::log1p(-pb), std::log(pb)};
    std::vector<double> log_q{std::log1p(-qb), std::log(qb)};
    engine::LikelihoodModel model(log_p, log_q);
    sim::ChangePointScenario sc;
    sc.l = 1;
    sc.log_p = log_p;
    sc.log_q = log_q;
    sc.nu_copies = cfg.get_int("nu", 1);
    auto curve = sim::tradeoff_curve(model, sc, h_list, opts);
    std::ostringstream sid;
    sid << "classical_p" << pb << "_q" << qb;
    append_tradeoff_rows(csv, sid.str(), curve);
    all_points.insert(all_points.end(), curve.begin(), curve.end());
  } else if (mode == "quantum") {
    const double r0 = cfg.require_double("r0");
    const double r1 = cfg.require_double("r1");
    const double theta = cfg.require_double("theta");
    const std::string meas_kind = cfg.get_string("measurement", "optimized");
    auto l_list = cfg.get_int_list("l_list", {1, 5});
    const std::int64_t nu = cfg.get_int("nu", 1);
    std::ostringstream family_csv;
    family_csv << "l,member,theta,h,target,t_fa_mean,t_fa_se,t_fa_censored_fraction,"
                  "delay_mean,delay_se\n";
    bool family_mode = cfg.has("family");

    for (std::size_t li = 0; li < l_list.size(); ++li) {
      const int l = require_block_length(l_list[li]);
      auto pre = schur::block_state(r0, l);
      auto post = schur::rotated_block_state(r1, theta, l);
      auto meas = build_measurement(meas_kind, pre, post);
      auto pair = povm::outcome_distribution(pre, post, meas);
      engine::LikelihoodModel model(pair);
      auto sc = sim::ChangePointScenario::from_copies(pair, nu);
      sim::SimOptions per_l = opts;
      per_l.stream_tag = (li + 1) * 0x1000000ULL;
      auto curve = sim::tradeoff_curve(model, sc, h_list, per_l);
      std::ostringstream sid;
      sid << "quantum_l" << l << '_' << meas_kind;
      append_tradeoff_rows(csv, sid.str(), curve);
      all_points.insert(all_points.end(), curve.begin(), curve.end());

      if (family_mode) {
        auto thetas = cfg.get_double_list("family", {});
        const double target = cfg.require_double("t_fa_target");
        const double h_fam = engine::threshold_for_family(target, thetas.size());
        std::vector<engine::LikelihoodModel> members;
        for (double th : thetas) {
          auto post_m = schur::rotated_block_state(r1, th, l);
          members.emplace_back(povm::outcome_distribution(pre, post_m, meas));
        }
        sim::SimOptions per_fam = per_l;
        per_fam.stream_tag += 0x10000000ULL;
        auto ft = sim::family_tradeoff(members, h_fam, l, per_fam);
        for (std::size_t m = 0; m < members.size(); ++m) {
          family_csv << l << ',' << m << ',' << fmt(thetas[m]) << ',' << fmt(ft.h) << ','
                     << fmt(target) << ',' << fmt(ft.t_fa.mean) << ','
                     << fmt(ft.t_fa.std_error) << ',' << fmt(ft.t_fa.censored_fraction)
                     << ',' << fmt(ft.delays[m].copies_mean) << ','
                     << fmt(ft.delays[m].copies_se) << '\n';
        }
      }
    }
    if (family_mode) outputs.push_back(write_csv(out_dir, "family.csv", family_csv.str()));
  } else {
    throw ConfigError("mode must be 'quantum' or 'classical', got '" + mode + "'");
  }

  outputs.insert(outputs.begin(), write_csv(out_dir, "tradeoff.csv", csv.str()));
  write_manifest(out_dir, "simulate", cfg, outputs);
  enforce_censoring(all_points, censor_tolerance);
  return kExitOk;
}

int cmd_classical_demo(const Config& cfg) {
  const std::string out_dir = resolve_out_dir(cfg);
  const double pb = require_bias(cfg, "p_bias");
  const double qb = require_bias(cfg, "q_bias");
  const std::int64_t nu = cfg.get_int("nu", 10000);
  const std::int64_t trajectories = cfg.get_int("trajectories", 20);
  const std::int64_t cap = cfg.get_int("cap", 100000);
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  auto h_list = cfg.get_double_list("h_list", {6.0, 22.0});
  if (nu < 1 || trajectories < 1 || cap < nu)
    throw ConfigError("classical-demo needs nu >= 1, trajectories >= 1, cap >= nu");
  double h_max = h_list.front();
  for (double h : h_list) h_max = std::max(h_max, h);

  const double z0 = std::log1p(-qb) - std::log1p(-pb);  // increment on outcome 0
  const double z1 = std::log(qb) - std::log(pb);        // increment on outcome 1
  const double drift_pre = (1 - pb) * z0 + pb * z1;     // -KL(p||q)
  const double drift_post = (1 - qb) * z0 + qb * z1;    // +KL(q||p)

  std::ostringstream csv;
  csv << "trial,step,z_cum,w,mean_trend,nu\n";
  for (std::int64_t trial = 0; trial < trajectories; ++trial) {
    std::mt19937_64 g(rng::derive_seed(seed, 0x636c6173ULL, static_cast<std::uint64_t>(trial)));
    double z_cum = 0, w = 0;
    for (std::int64_t step = 1; step <= cap; ++step) {
      const bool pre = step < nu;  // copies 1 .. nu-1 are pre-change
      const double bias = pre ? pb : qb;
      const double z = rng::uniform01(g) < bias ? z1 : z0;
      z_cum += z;
      w = engine::cusum_update(w, z);
      const double trend = pre ? step * drift_pre
                               : (nu - 1) * drift_pre + (step - nu + 1) * drift_post;
      csv << trial << ',' << step << ',' << fmt(z_cum) << ',' << fmt(w) << ','
          << fmt(trend) << ',' << nu << '\n';
      if (!pre && w >= h_max) break;
    }
  }

  std::vector<OutputRecord> outputs{write_csv(out_dir, "classical_demo.csv", csv.str())};
  write_manifest(out_dir, "classical-demo", cfg, outputs);
  return kExitOk;
}

int run_command(const std::string& name, const Config& cfg) {
  try {
    if (name == "divergences") return cmd_divergences(cfg);
    if (name == "block-rate") return cmd_block_rate(cfg);
    if (name == "simulate") return cmd_simulate(cfg);
    if (name == "classical-demo") return cmd_classical_demo(cfg);
    throw ConfigError("unknown command '" + name + "'");
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const VariationalNonConvergence& e) {
    std::fprintf(stderr, "variational solver did not converge: %s\n", e.what());
    return kExitVariational;
  } catch (const CensoringExceeded& e) {
    std::fprintf(stderr, "censoring tolerance exceeded: %s\n", e.what());
    return kExitCensoring;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace qusum::cli
