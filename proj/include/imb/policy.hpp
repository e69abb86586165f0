#ifndef IMB_POLICY_HPP
#define IMB_POLICY_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "imb/types.hpp"

namespace imb {

/// Fatigue: non-increasing weight on an arm's selection count.
using FatigueFn = std::function<double(int)>;

inline double reciprocal_fatigue(int n) { return 1.0 / n; }

/// Exploration width used across the experiments when none is given:
/// sqrt(1/2 * ln(sqrt(2TK/delta))).
inline double default_gamma_expl(int T, int K, double delta) {
  return std::sqrt(0.5 * std::log(std::sqrt(2.0 * T * K / delta)));
}

struct PolicyConfig {
  int num_arms = 0;   // K
  int picks = 1;      // L, arms chosen per round
  int dim = 1;        // d
  double gamma_expl = 1.0;
  double gamma_reg = 1.0;
  double delta = 0.05;
  double boost = 0.0;  // extra activations fed only to the regression target
  FatigueFn fatigue = reciprocal_fatigue;

  void validate() const {
    if (num_arms < 1) throw std::invalid_argument("PolicyConfig: K >= 1");
    if (picks < 1 || picks > num_arms)
      throw std::invalid_argument("PolicyConfig: need 1 <= L <= K");
    if (dim < 1) throw std::invalid_argument("PolicyConfig: d >= 1");
    if (!(delta > 0.0 && delta < 1.0))
      throw std::invalid_argument("PolicyConfig: delta in (0,1)");
  }
};

class Policy {
 public:
  explicit Policy(std::string name) : name_(std::move(name)) {}
  virtual ~Policy() = default;

  const std::string& name() const { return name_; }

  /// Exactly L distinct arms; ties between equal indices break toward the
  /// lowest arm id.
  virtual std::vector<int> select(const Context& ctx, int round) = 0;

  /// Folds one round of feedback into the policy state. `reward_share` has
  /// one entry per chosen arm (the campaign harness splits the round reward
  /// evenly: reward / L); policies that track hapaxes feed their own ledger
  /// from `fb` instead.
  virtual void update(const Context& ctx, const std::vector<int>& chosen,
                      const Feedback& fb,
                      const std::vector<double>& reward_share) = 0;

  /// Diagnostic snapshot for --trace runs.
  virtual nlohmann::ordered_json trace() const {
    return nlohmann::ordered_json::object();
  }

 private:
  std::string name_;
};

/// Indices of the L largest values; exact ties resolve to lower ids. Returns
/// sorted arm ids.
inline std::vector<int> top_l_by_index(const std::vector<double>& index,
                                       int picks) {
  std::vector<int> order(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return index[a] != index[b] ? index[a] > index[b] : a < b;
  });
  order.resize(picks);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace imb

#endif  // IMB_POLICY_HPP
