#ifndef IMB_HARNESS_HPP
#define IMB_HARNESS_HPP

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "imb/baselines.hpp"
#include "imb/environment.hpp"
#include "imb/glm_gt_ucb.hpp"
#include "imb/linucb.hpp"
#include "imb/policy.hpp"

namespace imb {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct EnvironmentSpec {
  enum class Kind { synthetic, replay };
  Kind kind = Kind::synthetic;
  WorldConfig world;          // synthetic
  std::string log_path;       // replay
  std::string contexts_path;  // replay
};

struct PolicySpec {
  std::string name;
  std::optional<double> gamma_expl;
  std::optional<double> gamma_reg;
  std::optional<double> delta;
  std::optional<bool> boost_enabled;
};

struct CampaignConfig {
  EnvironmentSpec env;
  std::vector<PolicySpec> policies;
  int T = 100;
  int R = 1;
  int L = 1;
  int K = 1;
  int d = 1;
  std::uint64_t master_seed = 1;
  double delta = 0.05;
  std::optional<double> gamma_expl;  // absent -> default_gamma_expl(T, K, delta)
  double gamma_reg = 1.0;
  std::optional<bool> boost_enabled;  // absent -> on for replay, off otherwise
  int workers = 1;
  bool trace = false;
  bool dump_ledger = false;

  double resolved_gamma_expl() const {
    return gamma_expl ? *gamma_expl : default_gamma_expl(T, K, delta);
  }

  bool resolved_boost() const {
    return boost_enabled ? *boost_enabled
                         : env.kind == EnvironmentSpec::Kind::replay;
  }

  void validate() const {
    if (R < 1) throw std::invalid_argument("config: R >= 1 required");
    if (K < 1) throw std::invalid_argument("config: K >= 1 required");
    if (L < 1 || L > K) throw std::invalid_argument("config: need 1 <= L <= K");
    if (T < K) throw std::invalid_argument("config: T >= K required (initialization phase)");
    if (d < 1 || d > DesignMatrix::kMaxDim)
      throw std::invalid_argument("config: d out of range");
    if (!(delta > 0.0 && delta < 1.0))
      throw std::invalid_argument("config: delta in (0,1)");
    if (policies.empty()) throw std::invalid_argument("config: no policies");
    for (const auto& p : policies)
      if (p.name != "glm_gt_ucb" && p.name != "lognorm_linucb" &&
          p.name != "linucb" && p.name != "ucb1" && p.name != "random" &&
          p.name != "fat_gt_ucb" && p.name != "oracle")
        throw std::invalid_argument("config: unknown policy '" + p.name + "'");
  }
};

inline CampaignConfig parse_campaign_config(const nlohmann::json& j) {
  CampaignConfig cfg;
  const auto& je = j.at("environment");
  std::string kind = je.at("type").get<std::string>();
  if (kind == "synthetic") {
    cfg.env.kind = EnvironmentSpec::Kind::synthetic;
    WorldConfig& w = cfg.env.world;
    w.node_count = je.value("node_count", w.node_count);
    w.attach_edges = je.value("attach_edges", w.attach_edges);
    w.threshold = je.value("threshold", w.threshold);
    w.noise_sigma = je.value("noise_sigma", w.noise_sigma);
    w.profile_mean = je.value("profile_mean", w.profile_mean);
    w.profile_sigma_scale = je.value("profile_sigma_scale", w.profile_sigma_scale);
    w.viral_prob = je.value("viral_prob", w.viral_prob);
    // context means accept a scalar or a per-coordinate array
    if (je.contains("normal_ctx_mean")) {
      if (je.at("normal_ctx_mean").is_array())
        w.normal_ctx_mean_vec = je.at("normal_ctx_mean").get<Vec>();
      else
        w.normal_ctx_mean = je.at("normal_ctx_mean").get<double>();
    }
    if (je.contains("viral_ctx_mean")) {
      if (je.at("viral_ctx_mean").is_array())
        w.viral_ctx_mean_vec = je.at("viral_ctx_mean").get<Vec>();
      else
        w.viral_ctx_mean = je.at("viral_ctx_mean").get<double>();
    }
    w.ctx_sigma = je.value("ctx_sigma", w.ctx_sigma);
    w.viral_ctx_sigma = je.value("viral_ctx_sigma", w.viral_ctx_sigma);
  } else if (kind == "replay") {
    cfg.env.kind = EnvironmentSpec::Kind::replay;
    cfg.env.log_path = je.at("log").get<std::string>();
    cfg.env.contexts_path = je.at("contexts").get<std::string>();
  } else {
    throw std::invalid_argument("config: environment.type must be synthetic or replay");
  }

  cfg.T = j.at("T").get<int>();
  cfg.R = j.at("R").get<int>();
  cfg.L = j.at("L").get<int>();
  cfg.K = j.at("K").get<int>();
  cfg.d = j.at("d").get<int>();
  cfg.master_seed = j.value("seed", std::uint64_t{1});
  cfg.delta = j.value("delta", 0.05);
  if (j.contains("gamma_expl")) cfg.gamma_expl = j.at("gamma_expl").get<double>();
  cfg.gamma_reg = j.value("gamma_reg", 1.0);
  if (j.contains("boost_enabled"))
    cfg.boost_enabled = j.at("boost_enabled").get<bool>();

  for (const auto& jp : j.at("policies")) {
    PolicySpec spec;
    if (jp.is_string()) {
      spec.name = jp.get<std::string>();
    } else {
      spec.name = jp.at("name").get<std::string>();
      if (jp.contains("gamma_expl")) spec.gamma_expl = jp.at("gamma_expl").get<double>();
      if (jp.contains("gamma_reg")) spec.gamma_reg = jp.at("gamma_reg").get<double>();
      if (jp.contains("delta")) spec.delta = jp.at("delta").get<double>();
      if (jp.contains("boost_enabled"))
        spec.boost_enabled = jp.at("boost_enabled").get<bool>();
    }
    cfg.policies.push_back(std::move(spec));
  }

  if (cfg.env.kind == EnvironmentSpec::Kind::synthetic) {
    cfg.env.world.num_influencers = cfg.K;
    cfg.env.world.context_dim = cfg.d;
    cfg.env.world.seed = mix64(cfg.master_seed, hash_str("world"));
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct RoundRow {
  int reward = 0;
  long long cum_reward = 0;
  int distinct_activated = 0;
};

struct RewardSample {
  int round = 0;
  int arm = 0;
  bool viral_arm = false;
  int new_activations = 0;
};

struct RunSeries {
  std::string policy;
  int run = 0;
  std::vector<RoundRow> rows;
  std::vector<RewardSample> samples;
  nlohmann::ordered_json trace;   // null unless cfg.trace
  nlohmann::ordered_json ledger;  // null unless cfg.dump_ledger
};

struct AggregateCurve {
  std::string policy;
  std::vector<double> mean_cum;
  std::vector<double> std_cum;
};

struct CampaignResult {
  std::vector<std::string> policy_order;
  std::vector<RunSeries> runs;  // (policy index major, run minor)
  int T = 0;
  int R = 0;

  const RunSeries& series(int policy_idx, int run) const {
    return runs.at(static_cast<std::size_t>(policy_idx) * R + run);
  }
};

/// Pointwise mean and sample standard deviation of the cumulative-reward
/// curves across runs.
inline std::vector<AggregateCurve> aggregate(const CampaignResult& result) {
  std::vector<AggregateCurve> curves;
  for (std::size_t p = 0; p < result.policy_order.size(); ++p) {
    AggregateCurve c;
    c.policy = result.policy_order[p];
    c.mean_cum.assign(result.T, 0.0);
    c.std_cum.assign(result.T, 0.0);
    for (int t = 0; t < result.T; ++t) {
      double mean = 0.0;
      for (int r = 0; r < result.R; ++r)
        mean += static_cast<double>(result.series(static_cast<int>(p), r).rows[t].cum_reward);
      mean /= result.R;
      double var = 0.0;
      if (result.R > 1) {
        for (int r = 0; r < result.R; ++r) {
          double dlt = static_cast<double>(
                           result.series(static_cast<int>(p), r).rows[t].cum_reward) -
                       mean;
          var += dlt * dlt;
        }
        var /= (result.R - 1);
      }
      c.mean_cum[t] = mean;
      c.std_cum[t] = std::sqrt(var);
    }
    curves.push_back(std::move(c));
  }
  return curves;
}

// ---------------------------------------------------------------------------
// Campaign runner
// ---------------------------------------------------------------------------

namespace detail {

inline PolicyConfig make_policy_config(const CampaignConfig& cfg,
                                       const PolicySpec& spec) {
  PolicyConfig pc;
  pc.num_arms = cfg.K;
  pc.picks = cfg.L;
  pc.dim = cfg.d;
  pc.delta = spec.delta.value_or(cfg.delta);
  pc.gamma_reg = spec.gamma_reg.value_or(cfg.gamma_reg);
  pc.gamma_expl = spec.gamma_expl
                      ? *spec.gamma_expl
                      : (cfg.gamma_expl ? *cfg.gamma_expl
                                        : default_gamma_expl(cfg.T, cfg.K, pc.delta));
  bool boost_on = spec.boost_enabled.value_or(cfg.resolved_boost());
  pc.boost = boost_on ? 10.0 / cfg.L : 0.0;
  return pc;
}

inline std::unique_ptr<Policy> make_policy(const CampaignConfig& cfg,
                                           const PolicySpec& spec, int run) {
  PolicyConfig pc = make_policy_config(cfg, spec);
  if (spec.name == "glm_gt_ucb") return std::make_unique<GlmGtUcb>(pc);
  if (spec.name == "lognorm_linucb") return std::make_unique<LogNormLinUcb>(pc);
  if (spec.name == "linucb") return std::make_unique<LinUcbBaseline>(pc);
  if (spec.name == "ucb1") return std::make_unique<Ucb1Policy>(pc);
  if (spec.name == "fat_gt_ucb") return std::make_unique<FatGtUcb>(pc);
  if (spec.name == "oracle") return std::make_unique<OraclePolicy>(pc);
  if (spec.name == "random")
    return std::make_unique<RandomPolicy>(
        pc, seed_stream(cfg.master_seed, spec.name, run, "policy"));
  throw std::invalid_argument("unknown policy: " + spec.name);
}

struct SharedWorld {
  std::shared_ptr<const SyntheticWorld> world;
  std::shared_ptr<const ReplayLog> log;
};

inline SharedWorld build_world(const CampaignConfig& cfg) {
  SharedWorld shared;
  if (cfg.env.kind == EnvironmentSpec::Kind::synthetic) {
    shared.world = std::make_shared<const SyntheticWorld>(
        generate_ba_world(cfg.env.world));
  } else {
    shared.log = std::make_shared<const ReplayLog>(
        load_replay_log(cfg.env.log_path, cfg.env.contexts_path));
    auto arms = shared.log->influencer_ids();
    if (static_cast<int>(arms.size()) != cfg.K)
      throw std::invalid_argument(
          "config: K does not match the replay log's influencer count (" +
          std::to_string(arms.size()) + ")");
    for (const auto& [cid, ctx] : shared.log->contexts)
      if (static_cast<int>(ctx.vector.size()) != cfg.d)
        throw std::invalid_argument("config: d does not match the replay contexts");
  }
  return shared;
}

inline std::unique_ptr<Environment> make_env(const CampaignConfig& cfg,
                                             const SharedWorld& shared,
                                             const std::string& policy,
                                             int run) {
  std::uint64_t seed = seed_stream(cfg.master_seed, policy, run, "env");
  if (cfg.env.kind == EnvironmentSpec::Kind::synthetic)
    return std::make_unique<SyntheticEnvironment>(shared.world, cfg.L, seed);
  return std::make_unique<ReplayEnvironment>(shared.log, seed);
}

/// One (policy, run) pair: a full T-round campaign against a private
/// environment instance and ground-truth ledger.
inline RunSeries run_single(const CampaignConfig& cfg, const SharedWorld& shared,
                            const PolicySpec& spec, int run) {
  auto env = make_env(cfg, shared, spec.name, run);
  auto policy = make_policy(cfg, spec, run);
  // Context stream is keyed by run only, so every policy in a run faces the
  // same context sequence.
  Rng ctx_rng(seed_stream(cfg.master_seed, "", run, "ctx"));
  ActivationLedger ledger;

  RunSeries series;
  series.policy = spec.name;
  series.run = run;
  series.rows.reserve(cfg.T);

  long long cum = 0;
  for (int t = 1; t <= cfg.T; ++t) {
    ContextDraw draw = env->draw_context(ctx_rng);
    if (auto* oracle = dynamic_cast<OraclePolicy*>(policy.get())) {
      std::uint64_t fork =
          mix64(seed_stream(cfg.master_seed, spec.name, run, "oracle"),
                static_cast<std::uint64_t>(t));
      oracle->set_ranking(env->oracle_ranking(draw, ledger, fork));
    }
    std::vector<int> chosen = policy->select(draw.ctx, t);
    {
      std::vector<int> dedup = chosen;
      std::sort(dedup.begin(), dedup.end());
      if (static_cast<int>(dedup.size()) != cfg.L ||
          std::adjacent_find(dedup.begin(), dedup.end()) != dedup.end())
        throw std::logic_error(spec.name + ": selection is not L distinct arms");
    }
    Feedback fb = env->step(t, chosen, draw);

    for (const auto& [arm, nodes] : fb.per_influencer) {
      int fresh = 0;
      for (NodeId node : nodes)
        if (ledger.count(node) == 0) ++fresh;
      series.samples.push_back({t, arm, draw.arm_is_viral(arm), fresh});
    }
    int reward = ledger.record(fb);
    std::vector<double> shares(chosen.size(),
                               static_cast<double>(reward) / cfg.L);
    policy->update(draw.ctx, chosen, fb, shares);

    cum += reward;
    series.rows.push_back({reward, cum, ledger.seen_total()});
  }

  if (cum != ledger.seen_total())
    throw std::logic_error("conservation violated: sum of rewards != distinct");
  if (ledger.seen_total() > env->node_universe())
    throw std::logic_error("conservation violated: distinct > node universe");

  if (cfg.trace) series.trace = policy->trace();
  if (cfg.dump_ledger) series.ledger = ledger.to_json();
  return series;
}

}  // namespace detail

/// Runs R campaigns of T rounds for every configured policy. Fully
/// deterministic given the config: every random stream is derived by
/// counter-based hashing of (master seed, policy, run, purpose), so worker
/// parallelism cannot change any output.
inline CampaignResult run_campaign(const CampaignConfig& cfg) {
  cfg.validate();
  detail::SharedWorld shared = detail::build_world(cfg);

  CampaignResult result;
  result.T = cfg.T;
  result.R = cfg.R;
  for (const auto& spec : cfg.policies) result.policy_order.push_back(spec.name);
  result.runs.resize(cfg.policies.size() * static_cast<std::size_t>(cfg.R));

  const int total = static_cast<int>(result.runs.size());
  const int workers = std::max(1, cfg.workers);
  if (workers == 1) {
    for (int task = 0; task < total; ++task) {
      int p = task / cfg.R, r = task % cfg.R;
      result.runs[task] = detail::run_single(cfg, shared, cfg.policies[p], r);
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int wi = 0; wi < workers; ++wi) {
      pool.emplace_back([&, wi] {
        try {
          for (int task = next.fetch_add(1); task < total;
               task = next.fetch_add(1)) {
            int p = task / cfg.R, r = task % cfg.R;
            result.runs[task] =
                detail::run_single(cfg, shared, cfg.policies[p], r);
          }
        } catch (...) {
          errors[wi] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors)
      if (err) std::rethrow_exception(err);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline void write_runs_csv(const CampaignResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "policy,run,round,reward,cum_reward,distinct_activated\n";
  for (const auto& series : result.runs)
    for (std::size_t t = 0; t < series.rows.size(); ++t)
      out << series.policy << ',' << series.run << ',' << (t + 1) << ','
          << series.rows[t].reward << ',' << series.rows[t].cum_reward << ','
          << series.rows[t].distinct_activated << '\n';
}

inline void write_aggregate_csv(const std::vector<AggregateCurve>& curves,
                                const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "policy,round,mean_cum_reward,std_cum_reward\n";
  for (const auto& c : curves)
    for (std::size_t t = 0; t < c.mean_cum.size(); ++t)
      out << c.policy << ',' << (t + 1) << ',' << format_double(c.mean_cum[t])
          << ',' << format_double(c.std_cum[t]) << '\n';
}

inline void write_samples_csv(const CampaignResult& result,
                              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "policy,run,round,influencer,regime,new_activations\n";
  for (const auto& series : result.runs)
    for (const auto& s : series.samples)
      out << series.policy << ',' << series.run << ',' << s.round << ','
          << s.arm << ',' << (s.viral_arm ? "viral" : "normal") << ','
          << s.new_activations << '\n';
}

/// Writes runs.csv, aggregate.csv, reward_samples.csv (and trace.json /
/// ledgers.json when requested) into `out_dir`.
inline void write_campaign_outputs(const CampaignConfig& cfg,
                                   const CampaignResult& result,
                                   const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_runs_csv(result, out_dir + "/runs.csv");
  write_aggregate_csv(aggregate(result), out_dir + "/aggregate.csv");
  write_samples_csv(result, out_dir + "/reward_samples.csv");
  if (cfg.trace) {
    nlohmann::ordered_json traces = nlohmann::ordered_json::array();
    for (const auto& series : result.runs)
      traces.push_back({{"policy", series.policy},
                        {"run", series.run},
                        {"state", series.trace}});
    std::ofstream out(out_dir + "/trace.json", std::ios::binary);
    out << traces.dump(2) << "\n";
  }
  if (cfg.dump_ledger) {
    nlohmann::ordered_json ledgers = nlohmann::ordered_json::array();
    for (const auto& series : result.runs)
      ledgers.push_back({{"policy", series.policy},
                         {"run", series.run},
                         {"ledger", series.ledger}});
    std::ofstream out(out_dir + "/ledgers.json", std::ios::binary);
    out << ledgers.dump(2) << "\n";
  }
}

}  // namespace imb

#endif  // IMB_HARNESS_HPP
