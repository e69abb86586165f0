#ifndef IMB_ANALYSIS_HPP
#define IMB_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "imb/harness.hpp"
#include "imb/linalg.hpp"
#include "imb/linucb.hpp"
#include "imb/rng.hpp"

namespace imb {

// ---------------------------------------------------------------------------
// Poisson fit
// ---------------------------------------------------------------------------

struct PoissonFit {
  double lambda = 0.0;  // MLE (sample mean)
  double gof = 0.0;     // max |ECDF - Poisson CDF| over the observed support
  std::size_t n = 0;
};

inline double poisson_cdf(int x, double lambda) {
  if (x < 0) return 0.0;
  double pmf = std::exp(-lambda);
  double cdf = pmf;
  for (int i = 1; i <= x; ++i) {
    pmf *= lambda / i;
    cdf += pmf;
  }
  return std::min(cdf, 1.0);
}

inline PoissonFit poisson_fit(std::span<const int> samples) {
  if (samples.empty()) throw std::invalid_argument("poisson_fit: no samples");
  PoissonFit fit;
  fit.n = samples.size();
  double sum = 0.0;
  for (int s : samples) sum += s;
  fit.lambda = sum / static_cast<double>(samples.size());

  std::vector<int> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  double worst = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    double ecdf = static_cast<double>(j) / sorted.size();
    worst = std::max(worst, std::fabs(ecdf - poisson_cdf(sorted[i], fit.lambda)));
    i = j;
  }
  fit.gof = worst;
  return fit;
}

// ---------------------------------------------------------------------------
// Empirical regret on a stationary log-linear bandit
// ---------------------------------------------------------------------------

struct RegretStep {
  Vec context;
  double log_reward = 0.0;  // reward at log scale for the round
};

/// Cumulative regret per round against the best known arm:
/// sum_s max_k <theta_k, Y_s> - sum_s r_s, with r_s at log scale.
inline std::vector<double> empirical_regret(std::span<const RegretStep> trace,
                                            std::span<const Vec> true_thetas) {
  if (true_thetas.empty())
    throw std::invalid_argument("empirical_regret: ground truth required");
  std::vector<double> cum;
  cum.reserve(trace.size());
  double total = 0.0;
  for (const RegretStep& step : trace) {
    double best = -std::numeric_limits<double>::infinity();
    for (const Vec& theta : true_thetas)
      best = std::max(best, dot(theta, step.context));
    total += best - step.log_reward;
    cum.push_back(total);
  }
  return cum;
}

/// Stationary bandit with log-linear rewards: pulling arm k under context Y
/// pays exp(<theta_k, Y> + noise). Supports the sublinear-regret check for
/// the log-normal policy, where the true parameters are known.
class LogLinearBandit {
 public:
  LogLinearBandit(std::vector<Vec> thetas, double noise_sigma, std::uint64_t seed)
      : thetas_(std::move(thetas)), noise_sigma_(noise_sigma), rng_(seed) {}

  static LogLinearBandit random_instance(int K, int d, double noise_sigma,
                                         std::uint64_t seed) {
    Rng gen(mix64(seed, hash_str("bandit-thetas")));
    std::vector<Vec> thetas(K, Vec(d, 0.0));
    for (auto& theta : thetas) {
      for (double& x : theta) x = gen.uniform01();
      double nrm = norm2(theta);
      if (nrm > 1.0)
        for (double& x : theta) x /= nrm;
    }
    return LogLinearBandit(std::move(thetas), noise_sigma, seed);
  }

  int num_arms() const { return static_cast<int>(thetas_.size()); }
  int dim() const { return static_cast<int>(thetas_[0].size()); }
  const std::vector<Vec>& thetas() const { return thetas_; }

  Context draw_context() {
    Context ctx;
    ctx.vector.resize(dim());
    for (double& x : ctx.vector) x = rng_.uniform01();
    return ctx;
  }

  /// Raw (exponential-scale) reward for pulling `arm`.
  double pull(int arm, const Context& ctx) {
    double mean = dot(thetas_.at(arm), ctx.vector);
    double noise = noise_sigma_ > 0.0 ? rng_.normal(0.0, noise_sigma_) : 0.0;
    return std::exp(mean + noise);
  }

 private:
  std::vector<Vec> thetas_;
  double noise_sigma_;
  Rng rng_;
};

// ---------------------------------------------------------------------------
// Plot data export
// ---------------------------------------------------------------------------

namespace detail {

inline const char* plot_color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return palette[i % 8];
}

inline void write_curves_csv(const std::vector<AggregateCurve>& curves,
                             std::size_t from_round, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "policy,round,mean_cum_reward,std_cum_reward\n";
  for (const auto& c : curves)
    for (std::size_t t = from_round; t < c.mean_cum.size(); ++t)
      out << c.policy << ',' << (t + 1) << ',' << format_double(c.mean_cum[t])
          << ',' << format_double(c.std_cum[t]) << '\n';
}

}  // namespace detail

/// Self-contained SVG line chart of the mean cumulative reward per policy
/// with a +/- one standard deviation band.
inline void write_curves_svg(const std::vector<AggregateCurve>& curves,
                             const std::string& path) {
  const double width = 960, height = 600;
  const double ml = 70, mr = 180, mt = 30, mb = 50;
  std::size_t T = 0;
  double ymax = 1.0;
  for (const auto& c : curves) {
    T = std::max(T, c.mean_cum.size());
    for (std::size_t t = 0; t < c.mean_cum.size(); ++t)
      ymax = std::max(ymax, c.mean_cum[t] + c.std_cum[t]);
  }
  auto sx = [&](double round) {
    return ml + (width - ml - mr) * (T > 1 ? (round - 1) / (T - 1.0) : 0.0);
  };
  auto sy = [&](double v) { return height - mb - (height - mt - mb) * v / ymax; };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << sy(0) << "\" x2=\""
      << width - mr << "\" y2=\"" << sy(0) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << sy(0) << "\" x2=\"" << ml
      << "\" y2=\"" << mt << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (width - mr + ml) / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"14\">round</text>\n";
  out << "<text x=\"18\" y=\"" << (height - mb + mt) / 2
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 "
      << (height - mb + mt) / 2 << ")\">mean cumulative reward</text>\n";

  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    if (c.mean_cum.empty()) continue;
    std::ostringstream band;
    band << "<path d=\"M";
    for (std::size_t t = 0; t < c.mean_cum.size(); ++t)
      band << (t ? " L" : "") << format_double(sx(t + 1.0)) << ' '
           << format_double(sy(c.mean_cum[t] + c.std_cum[t]));
    for (std::size_t t = c.mean_cum.size(); t-- > 0;)
      band << " L" << format_double(sx(t + 1.0)) << ' '
           << format_double(sy(std::max(0.0, c.mean_cum[t] - c.std_cum[t])));
    band << " Z\" fill=\"" << detail::plot_color(i)
         << "\" fill-opacity=\"0.15\" stroke=\"none\"/>";
    out << band.str() << "\n";

    out << "<polyline fill=\"none\" stroke=\"" << detail::plot_color(i)
        << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t t = 0; t < c.mean_cum.size(); ++t)
      out << format_double(sx(t + 1.0)) << ',' << format_double(sy(c.mean_cum[t]))
          << (t + 1 < c.mean_cum.size() ? " " : "");
    out << "\"/>\n";

    double ly = mt + 18.0 * (i + 1);
    out << "<line x1=\"" << width - mr + 10 << "\" y1=\"" << ly << "\" x2=\""
        << width - mr + 34 << "\" y2=\"" << ly << "\" stroke=\""
        << detail::plot_color(i) << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << width - mr + 40 << "\" y=\"" << ly + 4
        << "\" font-size=\"13\">" << c.policy << "</text>\n";
  }
  out << "</svg>\n";
}

/// Writes curves.csv (full horizon) and curves_tail50.csv (last 50 rounds),
/// plus curves.svg when `svg` is set.
inline void export_plot_data(const std::vector<AggregateCurve>& curves,
                             const std::string& out_dir, bool svg) {
  std::filesystem::create_directories(out_dir);
  std::size_t T = curves.empty() ? 0 : curves.front().mean_cum.size();
  std::size_t tail_from = T > 50 ? T - 50 : 0;
  detail::write_curves_csv(curves, 0, out_dir + "/curves.csv");
  detail::write_curves_csv(curves, tail_from, out_dir + "/curves_tail50.csv");
  if (svg) write_curves_svg(curves, out_dir + "/curves.svg");
}

// ---------------------------------------------------------------------------
// Loading run outputs back for the analyze / plot-data subcommands
// ---------------------------------------------------------------------------

inline std::vector<AggregateCurve> load_aggregate_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": empty aggregate file");
  std::vector<AggregateCurve> curves;
  std::map<std::string, std::size_t> by_name;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string policy, round_s, mean_s, std_s;
    if (!std::getline(row, policy, ',') || !std::getline(row, round_s, ',') ||
        !std::getline(row, mean_s, ',') || !std::getline(row, std_s))
      throw std::runtime_error(path + ": malformed row: " + line);
    auto [it, inserted] = by_name.try_emplace(policy, curves.size());
    if (inserted) curves.push_back({policy, {}, {}});
    curves[it->second].mean_cum.push_back(std::stod(mean_s));
    curves[it->second].std_cum.push_back(std::stod(std_s));
  }
  return curves;
}

struct SampleCell {
  std::string policy;
  int influencer = 0;
  std::string regime;
  std::vector<int> values;
};

inline std::vector<SampleCell> load_reward_samples_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path + ": empty samples file");
  std::map<std::tuple<std::string, int, std::string>, std::vector<int>> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string policy, run_s, round_s, infl_s, regime, val_s;
    if (!std::getline(row, policy, ',') || !std::getline(row, run_s, ',') ||
        !std::getline(row, round_s, ',') || !std::getline(row, infl_s, ',') ||
        !std::getline(row, regime, ',') || !std::getline(row, val_s))
      throw std::runtime_error(path + ": malformed row: " + line);
    cells[{policy, std::stoi(infl_s), regime}].push_back(std::stoi(val_s));
  }
  std::vector<SampleCell> out;
  for (auto& [key, values] : cells)
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key),
                   std::move(values)});
  return out;
}

/// Per-cell Poisson fits of reward samples. Cells with fewer than
/// `min_samples` observations are reported but not fitted (gof left empty in
/// the CSV), mirroring the too-few-samples caveat for sparse datasets.
inline void write_poisson_fits_csv(const std::vector<SampleCell>& cells,
                                   const std::string& path, int min_samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "policy,influencer,regime,n_samples,lambda,gof\n";
  for (const auto& cell : cells) {
    out << cell.policy << ',' << cell.influencer << ',' << cell.regime << ','
        << cell.values.size() << ',';
    if (static_cast<int>(cell.values.size()) < min_samples) {
      out << ",\n";
      continue;
    }
    PoissonFit fit = poisson_fit(cell.values);
    out << format_double(fit.lambda) << ',' << format_double(fit.gof) << '\n';
  }
}

}  // namespace imb

#endif  // IMB_ANALYSIS_HPP
