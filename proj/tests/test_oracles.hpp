// Independent reference implementations used by the unit and acceptance
// suites. These deliberately do not share code paths with the library: the
// matrix inverse is an LU solve (the library maintains a Sherman-Morrison
// inverse and refreshes via Gauss-Jordan), the hapax counts are recomputed
// by scanning the whole feedback history, and the index formulas are
// straight-line transcriptions evaluated directly over the recorded plays.

#ifndef IMB_TEST_ORACLES_HPP
#define IMB_TEST_ORACLES_HPP

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "imb/glm_gt_ucb.hpp"
#include "imb/ledger.hpp"
#include "imb/linalg.hpp"
#include "imb/rng.hpp"
#include "imb/types.hpp"

namespace oracle {

// --- dense inverse via LU decomposition with partial pivoting -------------

inline std::vector<double> lu_invert(const std::vector<double>& m, int n) {
  std::vector<double> lu = m;
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(lu[r * n + col]) > std::fabs(lu[pivot * n + col])) pivot = r;
    if (lu[pivot * n + col] == 0.0)
      throw std::runtime_error("lu_invert: singular");
    if (pivot != col) {
      for (int j = 0; j < n; ++j) std::swap(lu[pivot * n + j], lu[col * n + j]);
      std::swap(perm[pivot], perm[col]);
    }
    for (int r = col + 1; r < n; ++r) {
      lu[r * n + col] /= lu[col * n + col];
      for (int j = col + 1; j < n; ++j)
        lu[r * n + j] -= lu[r * n + col] * lu[col * n + j];
    }
  }
  std::vector<double> inv(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double> col_solve(n);
  for (int e = 0; e < n; ++e) {
    for (int i = 0; i < n; ++i) col_solve[i] = (perm[i] == e) ? 1.0 : 0.0;
    for (int i = 0; i < n; ++i)  // forward: L y = b
      for (int j = 0; j < i; ++j) col_solve[i] -= lu[i * n + j] * col_solve[j];
    for (int i = n - 1; i >= 0; --i) {  // backward: U x = y
      for (int j = i + 1; j < n; ++j) col_solve[i] -= lu[i * n + j] * col_solve[j];
      col_solve[i] /= lu[i * n + i];
    }
    for (int i = 0; i < n; ++i) inv[i * n + e] = col_solve[i];
  }
  return inv;
}

inline std::vector<double> mat_vec(const std::vector<double>& m, int n,
                                   const std::vector<double>& v) {
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[i] += m[i * n + j] * v[j];
  return out;
}

inline std::vector<double> gram_of(const imb::DesignMatrix& V) {
  std::vector<double> g(static_cast<std::size_t>(V.dim()) * V.dim());
  for (int i = 0; i < V.dim(); ++i)
    for (int j = 0; j < V.dim(); ++j) g[i * V.dim() + j] = V.gram(i, j);
  return g;
}

// --- brute-force ledger recount --------------------------------------------

struct TraceCounts {
  std::map<imb::NodeId, int> counts;
  std::map<std::pair<int, int>, int> hapax;  // (round, arm) -> count
  std::vector<int> rewards;
  int distinct = 0;
};

/// Scans the full feedback history and counts, for every (round, arm), the
/// nodes that were activated exactly once overall, at that round, by that
/// arm; plus the per-round new-activation rewards.
inline TraceCounts recount(const std::vector<imb::Feedback>& trace) {
  TraceCounts tc;
  std::map<imb::NodeId, std::pair<int, int>> first_seen;
  for (const auto& fb : trace) {
    int reward = 0;
    for (const auto& [arm, nodes] : fb.per_influencer) {
      for (imb::NodeId node : nodes) {
        if (tc.counts[node]++ == 0) {
          ++reward;
          first_seen[node] = {fb.round, arm};
        }
      }
    }
    tc.rewards.push_back(reward);
    tc.distinct += reward;
  }
  for (const auto& [node, origin] : first_seen)
    if (tc.counts[node] == 1) tc.hapax[origin] += 1;
  return tc;
}

/// Random feedback trace: each round a random subset of arms gets random,
/// pairwise-disjoint node sets.
inline std::vector<imb::Feedback> random_trace(imb::Rng& rng, int max_rounds,
                                               int max_nodes, int num_arms,
                                               int picks) {
  int rounds = rng.uniform_int(1, max_rounds);
  std::vector<imb::Feedback> trace;
  for (int t = 1; t <= rounds; ++t) {
    imb::Feedback fb;
    fb.round = t;
    std::vector<int> arms = rng.sample_distinct(num_arms, picks);
    std::vector<char> used(max_nodes, 0);
    for (int arm : arms) {
      int sz = rng.uniform_int(0, 5);
      std::vector<imb::NodeId> nodes;
      for (int i = 0; i < sz; ++i) {
        int node = rng.uniform_int(0, max_nodes - 1);
        if (!used[node]) {
          used[node] = 1;
          nodes.push_back(node);
        }
      }
      std::sort(nodes.begin(), nodes.end());
      fb.per_influencer.emplace_back(arm, std::move(nodes));
    }
    trace.push_back(std::move(fb));
  }
  return trace;
}

// --- straight-line transcriptions of the index formulas --------------------

inline double fatigue(int n) { return 1.0 / n; }

inline double alpha_transcribed(const imb::Vec& theta, const imb::Vec& ctx,
                                int n, double c_bonus) {
  double inner = 0.0;
  for (std::size_t i = 0; i < ctx.size(); ++i) inner += theta[i] * ctx[i];
  return std::exp(fatigue(n) * (inner + c_bonus));
}

/// theta estimate used by the transcriptions: LU inverse of the Gram matrix
/// applied to s, projected to the unit ball.
inline imb::Vec theta_transcribed(const imb::GlmArmState& st) {
  auto inv = lu_invert(gram_of(st.V), st.V.dim());
  auto theta = mat_vec(inv, st.V.dim(), st.s_vec);
  double nrm = 0.0;
  for (double x : theta) nrm += x * x;
  nrm = std::sqrt(nrm);
  if (nrm > 1.0)
    for (double& x : theta) x /= nrm;
  return theta;
}

inline double quad_norm_transcribed(const imb::DesignMatrix& V,
                                    const imb::Vec& y) {
  auto inv = lu_invert(gram_of(V), V.dim());
  auto iy = mat_vec(inv, V.dim(), y);
  double q = 0.0;
  for (int i = 0; i < V.dim(); ++i) q += y[i] * iy[i];
  return std::sqrt(std::max(q, 0.0));
}

inline double good_turing_transcribed(const imb::GlmArmState& st,
                                      const imb::ActivationLedger& ledger,
                                      const imb::Vec& ctx, double c_bonus_now) {
  double sum = 0.0;
  for (const auto& play : st.plays)
    sum += ledger.hapax_count(play.round, st.arm) / play.alpha_at_play;
  double alpha_now =
      alpha_transcribed(theta_transcribed(st), ctx, st.n, c_bonus_now);
  return alpha_now * (1.0 / st.n) * sum;
}

inline double beta_transcribed(const imb::GlmArmState& st,
                               const std::vector<imb::GlmArmState>& all,
                               double c_now, double delta) {
  double n = st.n;
  double ln_inv_delta = std::log(1.0 / delta);
  double s1 = 0.0;
  for (const auto& play : st.plays)
    s1 += std::exp((2.0 - 2.0 * play.c_bonus) / play.n_at_play);
  double term1 =
      std::sqrt(2.0 * st.lambda_hat * std::exp((3.0 + 2.0 * c_now) / n) * s1 /
                (n * n) * ln_inv_delta);
  double denom = 0.0;
  for (const auto& other : all)
    for (const auto& play : other.plays)
      denom += std::exp(-1.0 / play.n_at_play);
  double term2 =
      std::sqrt(std::exp(2.0 / n) * st.lambda_hat * ln_inv_delta / denom);
  double s3 = 0.0;
  for (const auto& play : st.plays)
    s3 += std::exp((1.0 + play.c_bonus) / play.n_at_play);
  double term3 = std::exp((1.0 + c_now) / n) * s3 / (3.0 * n) * ln_inv_delta;
  return term1 + term2 + term3;
}

inline double index_transcribed(const imb::GlmArmState& st,
                                const std::vector<imb::GlmArmState>& all,
                                const imb::ActivationLedger& ledger,
                                const imb::Vec& ctx, double c_now,
                                double delta) {
  double g = good_turing_transcribed(st, ledger, ctx, c_now);
  double b = beta_transcribed(st, all, c_now, delta);
  double n = st.n;
  double sum = 0.0;
  for (const auto& play : st.plays)
    sum += std::exp((-2.0 - play.c_bonus) / play.n_at_play);
  double bias =
      st.lambda_hat * (1.0 - std::exp((-2.0 + c_now) / n) * (1.0 / n) * sum);
  return g + b + bias;
}

inline double lognorm_index_transcribed(const imb::DesignMatrix& V,
                                        const imb::Vec& s, const imb::Vec& y,
                                        double gamma_expl) {
  auto inv = lu_invert(gram_of(V), V.dim());
  auto theta = mat_vec(inv, V.dim(), s);
  double inner = 0.0;
  for (int i = 0; i < V.dim(); ++i) inner += theta[i] * y[i];
  return inner + gamma_expl * quad_norm_transcribed(V, y);
}

}  // namespace oracle

#endif  // IMB_TEST_ORACLES_HPP
