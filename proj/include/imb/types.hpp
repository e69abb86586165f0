#ifndef IMB_TYPES_HPP
#define IMB_TYPES_HPP

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "imb/linalg.hpp"

namespace imb {

/// Identity of a basic (activatable) node; stable within one campaign.
using NodeId = std::int64_t;

/// The per-round feature vector shown to the policies. Entries live in
/// [0, 1]; `context_id` is set by replay environments (centroid/topic id).
struct Context {
  Vec vector;
  std::optional<int> context_id;
};

/// Semi-bandit feedback for one round: the activated node ids, attributed to
/// exactly one of the chosen influencers each. Lists are kept sorted and the
/// influencer entries ordered by arm id so feedback is canonical.
struct Feedback {
  int round = 0;
  std::vector<std::pair<int, std::vector<NodeId>>> per_influencer;

  int total_activations() const {
    int n = 0;
    for (const auto& [arm, nodes] : per_influencer)
      n += static_cast<int>(nodes.size());
    return n;
  }
};

}  // namespace imb

#endif  // IMB_TYPES_HPP
