#ifndef IMB_LEDGER_HPP
#define IMB_LEDGER_HPP

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "imb/types.hpp"

namespace imb {

/// Global activation history for a campaign.
///
/// Tracks per-node activation counts, the round reward (first-time
/// activations), and the hapax counts per (round, influencer): the number of
/// nodes activated exactly once so far, at that round, by that influencer.
/// Hapax invalidation is eager: when a node's count reaches two, the hapax of
/// its former unique origin is decremented immediately.
class ActivationLedger {
 public:
  /// Folds one round of feedback in. Returns the round reward (count of
  /// never-seen-before nodes). Rounds must be recorded in strictly
  /// increasing order and attribution sets must be pairwise disjoint.
  int record(const Feedback& fb) {
    if (fb.round <= last_round_)
      throw std::invalid_argument("ActivationLedger: out-of-order round");
    std::unordered_set<NodeId> this_round;
    int reward = 0;
    for (const auto& [arm, nodes] : fb.per_influencer) {
      for (NodeId node : nodes) {
        if (!this_round.insert(node).second)
          throw std::invalid_argument(
              "ActivationLedger: node attributed to more than one influencer");
        int& c = counts_[node];
        ++c;
        if (c == 1) {
          ++reward;
          ++seen_total_;
          unique_origin_[node] = {fb.round, arm};
          ++hapax_[hapax_key(fb.round, arm)];
        } else if (c == 2) {
          auto it = unique_origin_.find(node);
          --hapax_[hapax_key(it->second.first, it->second.second)];
          unique_origin_.erase(it);
        }
      }
    }
    last_round_ = fb.round;
    rewards_.push_back(reward);
    return reward;
  }

  int count(NodeId node) const {
    auto it = counts_.find(node);
    return it == counts_.end() ? 0 : it->second;
  }

  /// Current (possibly invalidated-down) hapax count for (round, arm).
  int hapax_count(int round, int arm) const {
    auto it = hapax_.find(hapax_key(round, arm));
    return it == hapax_.end() ? 0 : it->second;
  }

  /// Number of distinct nodes activated so far; equals the reward total.
  int seen_total() const { return seen_total_; }

  int last_round() const { return last_round_; }

  /// Rewards in round order; sums to seen_total().
  const std::vector<int>& rewards() const { return rewards_; }

  nlohmann::ordered_json to_json() const {
    std::vector<std::pair<NodeId, int>> counts(counts_.begin(), counts_.end());
    std::sort(counts.begin(), counts.end());
    std::vector<std::pair<std::uint64_t, int>> hap(hapax_.begin(),
                                                   hapax_.end());
    std::sort(hap.begin(), hap.end());

    nlohmann::ordered_json j;
    j["seen_total"] = seen_total_;
    j["rewards"] = rewards_;
    auto& jc = j["counts"] = nlohmann::ordered_json::array();
    for (const auto& [node, c] : counts)
      jc.push_back({{"node", node}, {"count", c}});
    auto& jh = j["hapax"] = nlohmann::ordered_json::array();
    for (const auto& [key, c] : hap) {
      if (c == 0) continue;
      jh.push_back({{"round", static_cast<int>(key >> 32)},
                    {"influencer", static_cast<int>(key & 0xffffffffu)},
                    {"count", c}});
    }
    return j;
  }

 private:
  static std::uint64_t hapax_key(int round, int arm) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(round))
            << 32) |
           static_cast<std::uint32_t>(arm);
  }

  std::unordered_map<NodeId, int> counts_;
  std::unordered_map<NodeId, std::pair<int, int>> unique_origin_;
  std::unordered_map<std::uint64_t, int> hapax_;
  std::vector<int> rewards_;
  int last_round_ = 0;
  int seen_total_ = 0;
};

}  // namespace imb

#endif  // IMB_LEDGER_HPP
