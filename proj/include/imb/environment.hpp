#ifndef IMB_ENVIRONMENT_HPP
#define IMB_ENVIRONMENT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "imb/ledger.hpp"
#include "imb/linalg.hpp"
#include "imb/rng.hpp"
#include "imb/types.hpp"

namespace imb {

// ---------------------------------------------------------------------------
// Synthetic world
// ---------------------------------------------------------------------------

struct WorldConfig {
  int node_count = 2000;
  int attach_edges = 1;    // edges added per arriving node
  int num_influencers = 10;
  int context_dim = 8;

  // Activation model: an attempt on node j succeeds iff
  // sigmoid(<profile_j, Y_eff> + eps) >= threshold, eps ~ N(0, noise_sigma).
  double threshold = 0.999;
  double noise_sigma = 2.5;

  // Node profiles are i.i.d. N(profile_mean, (profile_sigma_scale/sqrt(d))^2)
  // per coordinate. The defaults below were calibrated together with the
  // context means so that viral rounds clear the sigmoid gate near the
  // percolation point while normal rounds stay mostly subcritical; see the
  // viral-uplift check in the environment tests.
  double profile_mean = 1.5;
  double profile_sigma_scale = 4.2;

  // Context sampling: gaussian per coordinate, clipped to [0,1]. Means are
  // per-coordinate vectors; the scalar fields fill them uniformly when the
  // vectors are left empty (resolved by generate_ba_world).
  double viral_prob = 0.5;
  double normal_ctx_mean = 0.09;
  double viral_ctx_mean = 0.54;
  Vec normal_ctx_mean_vec;
  Vec viral_ctx_mean_vec;
  double ctx_sigma = 0.06;          // normal-regime sigma
  double viral_ctx_sigma = -1.0;    // < 0: use ctx_sigma

  std::uint64_t seed = 1;

  Vec resolved_mean(bool viral) const {
    const Vec& v = viral ? viral_ctx_mean_vec : normal_ctx_mean_vec;
    if (!v.empty()) return v;
    return Vec(context_dim, viral ? viral_ctx_mean : normal_ctx_mean);
  }

  double resolved_sigma(bool viral) const {
    return viral && viral_ctx_sigma >= 0.0 ? viral_ctx_sigma : ctx_sigma;
  }
};

/// A fixed diffusion world: preferential-attachment graph, hidden per-node
/// profiles, and the K top-degree nodes designated as influencers.
struct SyntheticWorld {
  WorldConfig cfg;
  std::vector<std::vector<int>> adjacency;  // sorted neighbor lists
  std::vector<Vec> node_profiles;
  std::vector<int> influencers;    // node id per arm, ranked by degree
  std::vector<char> is_influencer;  // indexed by node id

  int num_arms() const { return static_cast<int>(influencers.size()); }
  int basic_node_count() const {
    return static_cast<int>(adjacency.size() - influencers.size());
  }
};

/// Barabasi-Albert preferential attachment: nodes m..n-1 arrive in order and
/// attach m edges each to existing nodes with probability proportional to
/// degree (uniform while all degrees are zero). m=1 yields a tree on n nodes.
inline SyntheticWorld generate_ba_world(const WorldConfig& cfg) {
  const int n = cfg.node_count;
  const int m = cfg.attach_edges;
  if (n <= m || m < 1)
    throw std::invalid_argument("generate_ba_world: need node_count > attach_edges >= 1");
  if (cfg.num_influencers < 1 || cfg.num_influencers > n)
    throw std::invalid_argument("generate_ba_world: bad influencer count");
  if (cfg.context_dim < 1 || cfg.context_dim > DesignMatrix::kMaxDim)
    throw std::invalid_argument("generate_ba_world: bad context dimension");
  for (const Vec* mean : {&cfg.normal_ctx_mean_vec, &cfg.viral_ctx_mean_vec})
    if (!mean->empty() && static_cast<int>(mean->size()) != cfg.context_dim)
      throw std::invalid_argument("generate_ba_world: context mean vector size");

  Rng rng(mix64(cfg.seed, hash_str("ba-graph")));
  SyntheticWorld w;
  w.cfg = cfg;
  w.adjacency.assign(n, {});

  // endpoint multiset: each node appears once per incident edge
  std::vector<int> endpoints;
  endpoints.reserve(2 * static_cast<std::size_t>(m) * n);
  std::vector<int> degree(n, 0);

  for (int v = m; v < n; ++v) {
    std::vector<int> targets;
    while (static_cast<int>(targets.size()) < std::min(m, v)) {
      int t;
      if (endpoints.empty()) {
        t = rng.uniform_int(0, v - 1);
      } else {
        t = endpoints[rng.uniform_int(0, static_cast<int>(endpoints.size()) - 1)];
      }
      if (std::find(targets.begin(), targets.end(), t) == targets.end())
        targets.push_back(t);
    }
    for (int t : targets) {
      w.adjacency[v].push_back(t);
      w.adjacency[t].push_back(v);
      endpoints.push_back(v);
      endpoints.push_back(t);
      ++degree[v];
      ++degree[t];
    }
  }
  for (auto& adj : w.adjacency) std::sort(adj.begin(), adj.end());

  // top-K degrees, ties by lowest node id
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return degree[a] != degree[b] ? degree[a] > degree[b] : a < b;
  });
  w.influencers.assign(order.begin(), order.begin() + cfg.num_influencers);
  w.is_influencer.assign(n, 0);
  for (int node : w.influencers) w.is_influencer[node] = 1;

  Rng prof_rng(mix64(cfg.seed, hash_str("profiles")));
  const double sigma = cfg.profile_sigma_scale / std::sqrt(cfg.context_dim);
  w.node_profiles.assign(n, Vec(cfg.context_dim, 0.0));
  for (int v = 0; v < n; ++v)
    for (int i = 0; i < cfg.context_dim; ++i)
      w.node_profiles[v][i] = prof_rng.normal(cfg.profile_mean, sigma);
  return w;
}

// ---------------------------------------------------------------------------
// Environment contract
// ---------------------------------------------------------------------------

/// One round's context draw. In viral rounds only the listed arms diffuse
/// under the drawn context; the others fall back to the normal-mean context.
struct ContextDraw {
  Context ctx;
  bool viral = false;
  std::vector<int> viral_arms;  // arm indices, sorted

  bool arm_is_viral(int arm) const {
    return viral && std::binary_search(viral_arms.begin(), viral_arms.end(), arm);
  }
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual int num_arms() const = 0;

  /// Upper bound on distinct activatable nodes (conservation checks).
  virtual long long node_universe() const = 0;

  /// Draws the round context from the supplied stream. The stream is shared
  /// across policies within a run so they face identical context sequences.
  virtual ContextDraw draw_context(Rng& ctx_rng) = 0;

  /// Plays the chosen arms and returns the attributed activations.
  virtual Feedback step(int round, const std::vector<int>& chosen,
                        const ContextDraw& draw) = 0;

  /// Ranks all arms by simulated new activations against `ledger`, best
  /// first, ties by lowest arm id. Uses an rng forked from `fork_seed`; never
  /// consumes campaign randomness.
  virtual std::vector<int> oracle_ranking(const ContextDraw& draw,
                                          const ActivationLedger& ledger,
                                          std::uint64_t fork_seed) const = 0;
};

// ---------------------------------------------------------------------------
// Synthetic environment: sigmoid-threshold independent cascades
// ---------------------------------------------------------------------------

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace detail {

/// Lockstep breadth-first independent cascades from the given seeds. Each
/// (attempting edge, target) pair is tested once with fresh noise; a node is
/// claimed by the cascade that first reaches it, ties by lowest arm id
/// (cascades are expanded in ascending arm order within each depth level).
/// Influencer nodes are seeds only, never activated as basic nodes.
inline std::vector<std::vector<NodeId>> run_cascades(
    const SyntheticWorld& w, const std::vector<int>& arms,
    const std::vector<Vec>& effective_ctx, Rng& rng) {
  const auto& cfg = w.cfg;
  const double gate = cfg.threshold;
  std::vector<char> activated(w.adjacency.size(), 0);
  std::vector<std::vector<int>> frontier(arms.size());
  std::vector<std::vector<NodeId>> spread(arms.size());

  for (std::size_t c = 0; c < arms.size(); ++c) {
    int seed_node = w.influencers[arms[c]];
    activated[seed_node] = 1;
    frontier[c].push_back(seed_node);
  }

  bool any = true;
  while (any) {
    any = false;
    std::vector<std::vector<int>> next(arms.size());
    for (std::size_t c = 0; c < arms.size(); ++c) {
      for (int u : frontier[c]) {
        for (int v : w.adjacency[u]) {
          if (activated[v] || w.is_influencer[v]) continue;
          double x = dot(w.node_profiles[v], effective_ctx[c]);
          if (cfg.noise_sigma > 0.0) x += rng.normal(0.0, cfg.noise_sigma);
          if (sigmoid(x) >= gate) {
            activated[v] = 1;
            next[c].push_back(v);
            spread[c].push_back(v);
          }
        }
      }
      if (!next[c].empty()) any = true;
    }
    frontier = std::move(next);
  }
  for (auto& s : spread) std::sort(s.begin(), s.end());
  return spread;
}

}  // namespace detail

class SyntheticEnvironment : public Environment {
 public:
  /// `picks` is the number of seeds per round (L); viral rounds mark
  /// `picks + 1` arms as viral, matching the campaign protocol.
  SyntheticEnvironment(std::shared_ptr<const SyntheticWorld> world, int picks,
                       std::uint64_t cascade_seed)
      : world_(std::move(world)), picks_(picks), rng_(cascade_seed) {}

  int num_arms() const override { return world_->num_arms(); }

  long long node_universe() const override {
    return world_->basic_node_count();
  }

  ContextDraw draw_context(Rng& ctx_rng) override {
    const auto& cfg = world_->cfg;
    ContextDraw draw;
    draw.viral = ctx_rng.uniform01() < cfg.viral_prob;
    Vec mean = cfg.resolved_mean(draw.viral);
    double sigma = cfg.resolved_sigma(draw.viral);
    draw.ctx.vector.resize(cfg.context_dim);
    for (int i = 0; i < cfg.context_dim; ++i)
      draw.ctx.vector[i] =
          std::clamp(ctx_rng.normal(mean[i], sigma), 0.0, 1.0);
    if (draw.viral)
      draw.viral_arms = ctx_rng.sample_distinct(num_arms(), picks_ + 1);
    return draw;
  }

  Feedback step(int round, const std::vector<int>& chosen,
                const ContextDraw& draw) override {
    validate_arms(chosen);
    std::vector<int> arms = chosen;
    std::sort(arms.begin(), arms.end());
    std::vector<Vec> eff(arms.size());
    for (std::size_t i = 0; i < arms.size(); ++i)
      eff[i] = effective_context(arms[i], draw);
    auto spread = detail::run_cascades(*world_, arms, eff, rng_);

    Feedback fb;
    fb.round = round;
    for (std::size_t i = 0; i < arms.size(); ++i)
      fb.per_influencer.emplace_back(arms[i], std::move(spread[i]));
    return fb;
  }

  std::vector<int> oracle_ranking(const ContextDraw& draw,
                                  const ActivationLedger& ledger,
                                  std::uint64_t fork_seed) const override {
    const int K = num_arms();
    std::vector<std::pair<int, int>> scored;  // (new count, arm)
    for (int arm = 0; arm < K; ++arm) {
      Rng sim(mix64(fork_seed, static_cast<std::uint64_t>(arm)));
      std::vector<Vec> eff{effective_context(arm, draw)};
      auto spread = detail::run_cascades(*world_, {arm}, eff, sim);
      int fresh = 0;
      for (NodeId node : spread[0])
        if (ledger.count(node) == 0) ++fresh;
      scored.emplace_back(fresh, arm);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<int> ranking;
    ranking.reserve(K);
    for (const auto& [cnt, arm] : scored) ranking.push_back(arm);
    return ranking;
  }

  const SyntheticWorld& world() const { return *world_; }

 private:
  Vec effective_context(int arm, const ContextDraw& draw) const {
    if (!draw.viral || draw.arm_is_viral(arm)) return draw.ctx.vector;
    return world_->cfg.resolved_mean(false);
  }

  void validate_arms(const std::vector<int>& chosen) const {
    for (int arm : chosen)
      if (arm < 0 || arm >= num_arms())
        throw std::invalid_argument("SyntheticEnvironment: unknown arm");
  }

  std::shared_ptr<const SyntheticWorld> world_;
  int picks_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// Replay environment over preprocessed cascade logs
// ---------------------------------------------------------------------------

/// Logged cascades keyed by (influencer id, context id), plus the context
/// vectors. Influencer ids are arbitrary; arms index the sorted distinct ids.
struct ReplayLog {
  std::map<int, Context> contexts;
  std::map<std::pair<int, int>, std::vector<std::vector<NodeId>>> records;

  std::vector<int> influencer_ids() const {
    std::set<int> ids;
    for (const auto& [key, recs] : records) ids.insert(key.first);
    return {ids.begin(), ids.end()};
  }

  long long distinct_nodes() const {
    std::set<NodeId> nodes;
    for (const auto& [key, recs] : records)
      for (const auto& rec : recs) nodes.insert(rec.begin(), rec.end());
    return static_cast<long long>(nodes.size());
  }
};

class ReplayEnvironment : public Environment {
 public:
  ReplayEnvironment(std::shared_ptr<const ReplayLog> log, std::uint64_t seed)
      : log_ptr_(std::move(log)), log_(*log_ptr_),
        arm_ids_(log_.influencer_ids()), rng_(seed) {
    if (log_.contexts.empty())
      throw std::invalid_argument("ReplayEnvironment: log has no contexts");
    if (arm_ids_.empty())
      throw std::invalid_argument("ReplayEnvironment: log has no influencers");
    for (const auto& [key, recs] : log_.records)
      if (!log_.contexts.count(key.second))
        throw std::invalid_argument(
            "ReplayEnvironment: record references unknown context_id");
    context_ids_.reserve(log_.contexts.size());
    for (const auto& [cid, ctx] : log_.contexts) context_ids_.push_back(cid);
  }

  ReplayEnvironment(ReplayLog log, std::uint64_t seed)
      : ReplayEnvironment(std::make_shared<const ReplayLog>(std::move(log)),
                          seed) {}

  int num_arms() const override { return static_cast<int>(arm_ids_.size()); }

  long long node_universe() const override { return log_.distinct_nodes(); }

  int influencer_id(int arm) const { return arm_ids_.at(arm); }

  ContextDraw draw_context(Rng& ctx_rng) override {
    int cid = context_ids_[ctx_rng.uniform_int(
        0, static_cast<int>(context_ids_.size()) - 1)];
    ContextDraw draw;
    draw.ctx = log_.contexts.at(cid);
    draw.ctx.context_id = cid;
    return draw;
  }

  /// For each chosen arm, samples one logged activation set uniformly with
  /// replacement for (influencer, context_id), or the empty set when the key
  /// is absent. A node appearing in several samples within the round is
  /// credited to the lowest chosen arm id.
  Feedback step(int round, const std::vector<int>& chosen,
                const ContextDraw& draw) override {
    if (!draw.ctx.context_id || !log_.contexts.count(*draw.ctx.context_id))
      throw std::invalid_argument("ReplayEnvironment: unknown context_id");
    std::vector<int> arms = chosen;
    std::sort(arms.begin(), arms.end());

    Feedback fb;
    fb.round = round;
    std::set<NodeId> claimed;
    for (int arm : arms) {
      if (arm < 0 || arm >= num_arms())
        throw std::invalid_argument("ReplayEnvironment: unknown arm");
      std::vector<NodeId> kept;
      for (NodeId node : sample_record(arm, *draw.ctx.context_id, rng_))
        if (claimed.insert(node).second) kept.push_back(node);
      std::sort(kept.begin(), kept.end());
      fb.per_influencer.emplace_back(arm, std::move(kept));
    }
    return fb;
  }

  std::vector<int> oracle_ranking(const ContextDraw& draw,
                                  const ActivationLedger& ledger,
                                  std::uint64_t fork_seed) const override {
    std::vector<std::pair<int, int>> scored;
    for (int arm = 0; arm < num_arms(); ++arm) {
      Rng sim(mix64(fork_seed, static_cast<std::uint64_t>(arm)));
      int fresh = 0;
      for (NodeId node : sample_record(arm, *draw.ctx.context_id, sim))
        if (ledger.count(node) == 0) ++fresh;
      scored.emplace_back(fresh, arm);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<int> ranking;
    for (const auto& [cnt, arm] : scored) ranking.push_back(arm);
    return ranking;
  }

  const ReplayLog& log() const { return log_; }

 private:
  std::vector<NodeId> sample_record(int arm, int cid, Rng& rng) const {
    auto it = log_.records.find({arm_ids_[arm], cid});
    if (it == log_.records.end() || it->second.empty()) return {};
    const auto& recs = it->second;
    return recs[rng.uniform_int(0, static_cast<int>(recs.size()) - 1)];
  }

  std::shared_ptr<const ReplayLog> log_ptr_;
  const ReplayLog& log_;
  std::vector<int> arm_ids_;
  std::vector<int> context_ids_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// Replay log JSONL serialization
// ---------------------------------------------------------------------------

inline void save_replay_log(const ReplayLog& log, const std::string& log_path,
                            const std::string& contexts_path) {
  std::ofstream ctx_out(contexts_path, std::ios::binary);
  if (!ctx_out) throw std::runtime_error("cannot write " + contexts_path);
  for (const auto& [cid, ctx] : log.contexts) {
    nlohmann::ordered_json j;
    j["context_id"] = cid;
    j["vector"] = ctx.vector;
    ctx_out << j.dump() << "\n";
  }
  std::ofstream rec_out(log_path, std::ios::binary);
  if (!rec_out) throw std::runtime_error("cannot write " + log_path);
  for (const auto& [key, recs] : log.records) {
    for (const auto& rec : recs) {
      nlohmann::ordered_json j;
      j["influencer"] = key.first;
      j["context_id"] = key.second;
      j["activations"] = rec;
      rec_out << j.dump() << "\n";
    }
  }
}

inline ReplayLog load_replay_log(const std::string& log_path,
                                 const std::string& contexts_path) {
  ReplayLog log;
  std::ifstream ctx_in(contexts_path, std::ios::binary);
  if (!ctx_in) throw std::runtime_error("cannot read " + contexts_path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ctx_in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(contexts_path + ":" + std::to_string(lineno) +
                               ": " + e.what());
    }
    Context ctx;
    ctx.context_id = j.at("context_id").get<int>();
    ctx.vector = j.at("vector").get<Vec>();
    log.contexts[*ctx.context_id] = std::move(ctx);
  }
  std::ifstream rec_in(log_path, std::ios::binary);
  if (!rec_in) throw std::runtime_error("cannot read " + log_path);
  lineno = 0;
  while (std::getline(rec_in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(log_path + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
    int infl = j.at("influencer").get<int>();
    int cid = j.at("context_id").get<int>();
    if (!log.contexts.count(cid))
      throw std::runtime_error(log_path + ":" + std::to_string(lineno) +
                               ": unknown context_id " + std::to_string(cid));
    auto nodes = j.at("activations").get<std::vector<NodeId>>();
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    log.records[{infl, cid}].push_back(std::move(nodes));
  }
  return log;
}

/// Builds a replay log from a synthetic world: draws `n_contexts` contexts
/// (mixing viral and normal regimes) and simulates `n_records` single-seed
/// cascades keyed by (influencer, context_id). Substitutes for real
/// platform logs in replay experiments.
inline ReplayLog synthesize_log(const SyntheticWorld& w, int n_contexts,
                                int n_records, std::uint64_t seed) {
  if (n_records > 0 && n_contexts < 1)
    throw std::invalid_argument("synthesize_log: records need contexts");
  ReplayLog log;
  Rng rng(mix64(seed, hash_str("loggen")));
  const auto& cfg = w.cfg;
  for (int cid = 0; cid < n_contexts; ++cid) {
    bool viral = rng.uniform01() < cfg.viral_prob;
    Vec mean = cfg.resolved_mean(viral);
    double sigma = cfg.resolved_sigma(viral);
    Context ctx;
    ctx.context_id = cid;
    ctx.vector.resize(cfg.context_dim);
    for (int i = 0; i < cfg.context_dim; ++i)
      ctx.vector[i] = std::clamp(rng.normal(mean[i], sigma), 0.0, 1.0);
    log.contexts[cid] = std::move(ctx);
  }
  for (int r = 0; r < n_records; ++r) {
    int cid = r % n_contexts;
    int arm = rng.uniform_int(0, w.num_arms() - 1);
    std::vector<Vec> eff{log.contexts[cid].vector};
    auto spread = detail::run_cascades(w, {arm}, eff, rng);
    log.records[{w.influencers[arm], cid}].push_back(std::move(spread[0]));
  }
  return log;
}

}  // namespace imb

#endif  // IMB_ENVIRONMENT_HPP
