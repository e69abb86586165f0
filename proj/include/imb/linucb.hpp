#ifndef IMB_LINUCB_HPP
#define IMB_LINUCB_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "imb/linalg.hpp"
#include "imb/policy.hpp"

namespace imb {

/// <theta_hat, Y> + gamma_expl * ||Y||_{V^-1} with theta_hat = V^-1 s.
inline double linear_ucb_index(const DesignMatrix& V,
                               std::span<const double> s_vec,
                               std::span<const double> ctx,
                               double gamma_expl) {
  Vec theta = V.solve(s_vec);
  return dot(theta, ctx) + gamma_expl * V.quad_norm(ctx);
}

/// Log-scale regression target: ln(r) for r >= 1, floored to 0 below that
/// (ln would be negative or undefined); `floored` reports the clamp.
inline double lognorm_update_target(double reward, bool* floored = nullptr) {
  if (reward >= 1.0) {
    if (floored) *floored = false;
    return std::log(reward);
  }
  if (floored) *floored = true;
  return 0.0;
}

/// Per-arm disjoint linear UCB over an identity prior. The regression target
/// is supplied by the subclass: log-scale reward for the log-normal variant,
/// the raw reward share for the plain baseline.
class LinUcbFamily : public Policy {
 public:
  LinUcbFamily(PolicyConfig cfg, std::string name)
      : Policy(std::move(name)), cfg_(std::move(cfg)) {
    cfg_.validate();
    for (int k = 0; k < cfg_.num_arms; ++k) {
      V_.emplace_back(cfg_.dim, cfg_.gamma_reg);
      s_.emplace_back(cfg_.dim, 0.0);
      n_.push_back(0);
    }
  }

  std::vector<int> select(const Context& ctx, int /*round*/) override {
    std::vector<double> index(cfg_.num_arms);
    for (int k = 0; k < cfg_.num_arms; ++k)
      index[k] = linear_ucb_index(V_[k], s_[k], ctx.vector, cfg_.gamma_expl);
    last_index_ = index;
    return top_l_by_index(index, cfg_.picks);
  }

  void update(const Context& ctx, const std::vector<int>& chosen,
              const Feedback& /*fb*/,
              const std::vector<double>& reward_share) override {
    if (reward_share.size() != chosen.size())
      throw std::invalid_argument(name() + ": one reward share per chosen arm");
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      int k = chosen[i];
      if (k < 0 || k >= cfg_.num_arms)
        throw std::invalid_argument(name() + ": arm not in range");
      double t = target(reward_share[i]);
      V_[k].update(ctx.vector);
      axpy(s_[k], t, ctx.vector);
      ++n_[k];
    }
  }

  nlohmann::ordered_json trace() const override {
    nlohmann::ordered_json arms = nlohmann::ordered_json::array();
    for (int k = 0; k < cfg_.num_arms; ++k) {
      nlohmann::ordered_json a;
      a["arm"] = k;
      a["n"] = n_[k];
      a["theta_hat"] = V_[k].solve(s_[k]);
      if (!last_index_.empty()) a["last_index"] = last_index_[k];
      arms.push_back(std::move(a));
    }
    return {{"policy", name()}, {"arms", std::move(arms)}};
  }

  const DesignMatrix& design(int k) const { return V_.at(k); }
  const Vec& s_vec(int k) const { return s_.at(k); }
  int plays(int k) const { return n_.at(k); }
  long long floored_updates() const { return floored_updates_; }

 protected:
  virtual double target(double share) = 0;

  PolicyConfig cfg_;
  long long floored_updates_ = 0;

 private:
  std::vector<DesignMatrix> V_;
  std::vector<Vec> s_;
  std::vector<int> n_;
  std::vector<double> last_index_;
};

/// Assumes log-normally distributed rewards: regresses ln(reward share) on
/// the round context.
class LogNormLinUcb final : public LinUcbFamily {
 public:
  explicit LogNormLinUcb(PolicyConfig cfg)
      : LinUcbFamily(std::move(cfg), "lognorm_linucb") {}

 protected:
  double target(double share) override {
    bool floored = false;
    double t = lognorm_update_target(share, &floored);
    if (floored) ++floored_updates_;
    return t;
  }
};

/// Plain per-arm LinUCB baseline: regresses the raw reward share.
class LinUcbBaseline final : public LinUcbFamily {
 public:
  explicit LinUcbBaseline(PolicyConfig cfg)
      : LinUcbFamily(std::move(cfg), "linucb") {}

 protected:
  double target(double share) override { return share; }
};

}  // namespace imb

#endif  // IMB_LINUCB_HPP
