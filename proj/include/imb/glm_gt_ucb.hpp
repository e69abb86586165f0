#ifndef IMB_GLM_GT_UCB_HPP
#define IMB_GLM_GT_UCB_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "imb/ledger.hpp"
#include "imb/linalg.hpp"
#include "imb/policy.hpp"

namespace imb {

/// External factor: exp(f(n) * (<theta_hat, ctx> + c_bonus)). The bonus term
/// is the contextual UCB gamma_expl * ||Y||_{V^-1}, zero when exploration is
/// disabled.
inline double glm_alpha(std::span<const double> theta_hat,
                        std::span<const double> ctx, int n, double c_bonus,
                        const FatigueFn& fatigue) {
  if (n < 1) throw std::invalid_argument("glm_alpha: n >= 1 required");
  return std::exp(fatigue(n) * (dot(theta_hat, ctx) + c_bonus));
}

/// Everything frozen at the moment an arm was played. `c_bonus` and
/// `alpha_at_play` use the estimates available then; `n_at_play` is the
/// selection count including that play (first play -> 1).
struct GlmPlay {
  int round = 0;
  Vec context;
  double c_bonus = 0.0;
  double alpha_at_play = 1.0;
  int n_at_play = 1;
  std::optional<double> r_prime;  // absent when the regression update was skipped
  int new_activations = 0;        // round reward r_t at that play
  int feedback_size = 0;          // |F_t| at that play
};

/// Per-arm sufficient statistics.
struct GlmArmState {
  int arm = 0;
  int n = 0;                     // completed selections
  DesignMatrix V;
  Vec s_vec;
  double lambda_hat = 0.0;       // (1/n) sum over plays of |F_s| / L
  std::vector<GlmPlay> plays;

  GlmArmState(int arm_id, int dim, double gamma_reg)
      : arm(arm_id), V(dim, gamma_reg), s_vec(dim, 0.0) {}

  /// Least-squares estimate V^-1 s, projected onto the unit ball.
  Vec theta_hat() const {
    Vec theta = V.solve(s_vec);
    double nrm = norm2(theta);
    if (nrm > 1.0)
      for (double& x : theta) x /= nrm;
    return theta;
  }
};

/// Good-Turing remaining-potential estimate: the current external factor
/// times the average of the arm's hapax counts, each discounted by the
/// external factor frozen when that round was played.
inline double glm_good_turing(const GlmArmState& state,
                              const ActivationLedger& ledger,
                              std::span<const double> ctx, double c_bonus_now,
                              const FatigueFn& fatigue) {
  if (state.n < 1) throw std::invalid_argument("glm_good_turing: unplayed arm");
  double discounted = 0.0;
  for (const GlmPlay& play : state.plays)
    discounted +=
        ledger.hapax_count(play.round, state.arm) / play.alpha_at_play;
  double alpha_now =
      glm_alpha(state.theta_hat(), ctx, state.n, c_bonus_now, fatigue);
  return alpha_now * discounted / state.n;
}

/// Confidence width around the Good-Turing estimate; three terms: a
/// Bennett-style variance term over the arm's plays, a concentration term
/// whose denominator aggregates every play of every arm, and a linear term.
inline double glm_beta(const GlmArmState& state,
                       std::span<const GlmArmState> all_states,
                       double c_bonus_now, double delta) {
  if (state.n < 1) throw std::invalid_argument("glm_beta: unplayed arm");
  double global_denom = 0.0;
  for (const GlmArmState& other : all_states)
    for (const GlmPlay& play : other.plays)
      global_denom += std::exp(-1.0 / play.n_at_play);
  if (global_denom <= 0.0)
    throw std::logic_error("glm_beta: no plays recorded yet");

  const double n = state.n;
  const double log_term = std::log(1.0 / delta);
  double sum_bennett = 0.0, sum_linear = 0.0;
  for (const GlmPlay& play : state.plays) {
    sum_bennett += std::exp((2.0 - 2.0 * play.c_bonus) / play.n_at_play);
    sum_linear += std::exp((1.0 + play.c_bonus) / play.n_at_play);
  }
  double term1 = std::sqrt(2.0 * state.lambda_hat *
                           std::exp((3.0 + 2.0 * c_bonus_now) / n) *
                           sum_bennett / (n * n) * log_term);
  double term2 =
      std::sqrt(std::exp(2.0 / n) * state.lambda_hat * log_term / global_denom);
  double term3 =
      std::exp((1.0 + c_bonus_now) / n) * sum_linear / (3.0 * n) * log_term;
  return term1 + term2 + term3;
}

/// Full UCB index: Good-Turing estimate + confidence width + bias correction.
inline double glm_index(const GlmArmState& state,
                        std::span<const GlmArmState> all_states,
                        const ActivationLedger& ledger,
                        std::span<const double> ctx, double c_bonus_now,
                        double delta, const FatigueFn& fatigue) {
  double g = glm_good_turing(state, ledger, ctx, c_bonus_now, fatigue);
  double beta = glm_beta(state, all_states, c_bonus_now, delta);
  const double n = state.n;
  double sum_bias = 0.0;
  for (const GlmPlay& play : state.plays)
    sum_bias += std::exp((-2.0 - play.c_bonus) / play.n_at_play);
  double bias = state.lambda_hat *
                (1.0 - std::exp((-2.0 + c_bonus_now) / n) * sum_bias / n);
  return g + beta + bias;
}

/// Regression target for the external-factor sub-problem:
/// ln(r * n / hapax-discounted sum) / f(n), where the sum runs over the arm's
/// play rounds including the one just recorded. Returns nothing when the
/// reward (plus boost) or the discounted sum is zero; the caller then skips
/// the V / s update for the round.
inline std::optional<double> glm_regression_target(
    double reward, const GlmArmState& state, const ActivationLedger& ledger,
    double boost, const FatigueFn& fatigue) {
  if (state.n < 1)
    throw std::invalid_argument("glm_regression_target: unplayed arm");
  double numerator = reward + boost;
  double discounted = 0.0;
  for (const GlmPlay& play : state.plays)
    discounted +=
        ledger.hapax_count(play.round, state.arm) / play.alpha_at_play;
  if (numerator <= 0.0 || discounted <= 0.0) return std::nullopt;
  return std::log(numerator * state.n / discounted) / fatigue(state.n);
}

/// Contextual Good-Turing UCB policy. Maintains a private activation ledger,
/// per-arm design matrices for the external-factor regression, and the play
/// history needed by the index formulas. The first K rounds are a forced
/// round-robin initialization.
class GlmGtUcb : public Policy {
 public:
  explicit GlmGtUcb(PolicyConfig cfg, std::string name = "glm_gt_ucb")
      : Policy(std::move(name)), cfg_(std::move(cfg)) {
    cfg_.validate();
    arms_.reserve(cfg_.num_arms);
    for (int k = 0; k < cfg_.num_arms; ++k)
      arms_.emplace_back(k, cfg_.dim, cfg_.gamma_reg);
    share_sum_.assign(cfg_.num_arms, 0.0);
  }

  std::vector<int> select(const Context& ctx, int round) override {
    // Forced round-robin for the first K rounds; also whenever an arm is
    // still unplayed (its index is undefined until n >= 1).
    if (round <= cfg_.num_arms || any_unseeded()) return init_selection(round);
    std::vector<double> index(cfg_.num_arms);
    last_g_.assign(cfg_.num_arms, 0.0);
    last_beta_.assign(cfg_.num_arms, 0.0);
    for (int k = 0; k < cfg_.num_arms; ++k) {
      double c_bonus = cfg_.gamma_expl * arms_[k].V.quad_norm(ctx.vector);
      last_g_[k] = glm_good_turing(arms_[k], ledger_, ctx.vector, c_bonus,
                                   cfg_.fatigue);
      last_beta_[k] = glm_beta(arms_[k], arms_, c_bonus, cfg_.delta);
      index[k] = glm_index(arms_[k], arms_, ledger_, ctx.vector, c_bonus,
                           cfg_.delta, cfg_.fatigue);
    }
    last_index_ = index;
    return top_l_by_index(index, cfg_.picks);
  }

  void update(const Context& ctx, const std::vector<int>& chosen,
              const Feedback& fb,
              const std::vector<double>& reward_share) override {
    if (reward_share.size() != chosen.size())
      throw std::invalid_argument("GlmGtUcb: one reward share per chosen arm");
    for (int arm : chosen)
      if (arm < 0 || arm >= cfg_.num_arms)
        throw std::invalid_argument("GlmGtUcb: arm not in range");
    // The regression target and hapax statistics come from the private
    // ledger's view of the feedback, not from the shares.
    int reward = ledger_.record(fb);
    int feedback_size = fb.total_activations();

    std::vector<int> arms = chosen;
    std::sort(arms.begin(), arms.end());
    for (int k : arms) {
      GlmArmState& st = arms_[k];
      st.n += 1;
      GlmPlay play;
      play.round = fb.round;
      play.context = ctx.vector;
      play.c_bonus = cfg_.gamma_expl * st.V.quad_norm(ctx.vector);
      play.alpha_at_play =
          glm_alpha(st.theta_hat(), ctx.vector, st.n, play.c_bonus, cfg_.fatigue);
      play.n_at_play = st.n;
      play.new_activations = reward;
      play.feedback_size = feedback_size;
      st.plays.push_back(std::move(play));

      auto target =
          glm_regression_target(reward, st, ledger_, cfg_.boost, cfg_.fatigue);
      if (target) {
        st.plays.back().r_prime = *target;
        st.V.update(ctx.vector);
        axpy(st.s_vec, *target, ctx.vector);
      }
      share_sum_[k] += static_cast<double>(feedback_size) / cfg_.picks;
      st.lambda_hat = share_sum_[k] / st.n;
    }
  }

  nlohmann::ordered_json trace() const override {
    nlohmann::ordered_json arms = nlohmann::ordered_json::array();
    for (const GlmArmState& st : arms_) {
      nlohmann::ordered_json a;
      a["arm"] = st.arm;
      a["n"] = st.n;
      a["lambda_hat"] = st.lambda_hat;
      a["theta_hat"] = st.n > 0 ? st.theta_hat() : Vec(cfg_.dim, 0.0);
      if (!last_index_.empty()) {
        a["last_index"] = last_index_[st.arm];
        a["good_turing"] = last_g_[st.arm];
        a["beta"] = last_beta_[st.arm];
      }
      arms.push_back(std::move(a));
    }
    return {{"policy", name()}, {"arms", std::move(arms)}};
  }

  const GlmArmState& arm_state(int k) const { return arms_.at(k); }
  const std::vector<GlmArmState>& arm_states() const { return arms_; }
  const ActivationLedger& ledger() const { return ledger_; }
  const PolicyConfig& config() const { return cfg_; }

 private:
  bool any_unseeded() const {
    for (const GlmArmState& st : arms_)
      if (st.n == 0) return true;
    return false;
  }

  /// Round-robin phase: anchor arm (round-1) mod K, then the lowest-id arms
  /// not yet seeded, then the lowest ids, until L arms are picked.
  std::vector<int> init_selection(int round) const {
    std::vector<int> sel;
    int anchor = (round - 1) % cfg_.num_arms;
    sel.push_back(anchor);
    for (int k = 0; k < cfg_.num_arms && static_cast<int>(sel.size()) < cfg_.picks; ++k)
      if (arms_[k].n == 0 && k != anchor) sel.push_back(k);
    for (int k = 0; k < cfg_.num_arms && static_cast<int>(sel.size()) < cfg_.picks; ++k)
      if (std::find(sel.begin(), sel.end(), k) == sel.end()) sel.push_back(k);
    std::sort(sel.begin(), sel.end());
    return sel;
  }

  PolicyConfig cfg_;
  std::vector<GlmArmState> arms_;
  std::vector<double> share_sum_;
  std::vector<double> last_index_;
  std::vector<double> last_g_;
  std::vector<double> last_beta_;
  ActivationLedger ledger_;
};

}  // namespace imb

#endif  // IMB_GLM_GT_UCB_HPP
