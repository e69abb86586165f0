#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "imb/analysis.hpp"
#include "imb/rng.hpp"

using imb::PoissonFit;
using imb::RegretStep;
using imb::Rng;
using imb::Vec;

namespace {

/// Poisson sampler by CDF inversion; independent of the fitted code path.
int poisson_draw(Rng& rng, double lambda) {
  double u = rng.uniform01();
  double pmf = std::exp(-lambda);
  double cdf = pmf;
  int k = 0;
  while (u > cdf && k < 10000) {
    ++k;
    pmf *= lambda / k;
    cdf += pmf;
  }
  return k;
}

}  // namespace

TEST_CASE("poisson fit basics") {
  std::vector<int> s{1, 2, 3};
  PoissonFit fit = imb::poisson_fit(s);
  CHECK(fit.lambda == Catch::Approx(2.0));

  std::vector<int> zeros{0, 0, 0};
  fit = imb::poisson_fit(zeros);
  CHECK(fit.lambda == 0.0);
  CHECK(fit.gof == Catch::Approx(0.0).margin(1e-12));

  CHECK_THROWS_AS(imb::poisson_fit(std::vector<int>{}), std::invalid_argument);
}

TEST_CASE("poisson fit recovers the rate of genuine poisson data") {
  Rng rng(9001);
  std::vector<int> samples;
  samples.reserve(10000);
  for (int i = 0; i < 10000; ++i) samples.push_back(poisson_draw(rng, 3.0));
  PoissonFit fit = imb::poisson_fit(samples);
  CHECK(fit.lambda >= 2.9);
  CHECK(fit.lambda <= 3.1);
  CHECK(fit.gof < 0.05);
}

TEST_CASE("duplicating every sample leaves the fit unchanged") {
  Rng rng(4);
  std::vector<int> samples;
  for (int i = 0; i < 300; ++i) samples.push_back(poisson_draw(rng, 1.7));
  PoissonFit once = imb::poisson_fit(samples);
  std::vector<int> doubled = samples;
  doubled.insert(doubled.end(), samples.begin(), samples.end());
  PoissonFit twice = imb::poisson_fit(doubled);
  CHECK(once.lambda == Catch::Approx(twice.lambda));
  CHECK(once.gof == Catch::Approx(twice.gof));
}

TEST_CASE("empirical regret of oracle play is exactly zero") {
  Rng rng(10);
  std::vector<Vec> thetas{{0.9, 0.1}, {0.1, 0.9}};
  std::vector<RegretStep> trace;
  for (int t = 0; t < 200; ++t) {
    Vec y{rng.uniform01(), rng.uniform01()};
    double best = std::max(imb::dot(thetas[0], y), imb::dot(thetas[1], y));
    trace.push_back({y, best});  // noise-free oracle reward
  }
  auto regret = imb::empirical_regret(trace, thetas);
  REQUIRE(regret.size() == trace.size());
  for (double r : regret) CHECK(r == Catch::Approx(0.0).margin(1e-12));

  CHECK_THROWS_AS(imb::empirical_regret(trace, std::vector<Vec>{}),
                  std::invalid_argument);
}

TEST_CASE("single-arm regret is pure noise with mean near zero") {
  const double sigma = 0.3;
  const int T = 4000;
  Rng rng(77);
  std::vector<Vec> thetas{{0.5, 0.5}};
  std::vector<RegretStep> trace;
  for (int t = 0; t < T; ++t) {
    Vec y{rng.uniform01(), rng.uniform01()};
    double mean = imb::dot(thetas[0], y);
    trace.push_back({y, mean + rng.normal(0.0, sigma)});
  }
  auto regret = imb::empirical_regret(trace, thetas);
  // cumulative noise sum is within 4 sigma sqrt(T) of zero
  CHECK(std::fabs(regret.back()) <= 4.0 * sigma * std::sqrt(double(T)));
}

TEST_CASE("uniform-random play accumulates regret at half the mean gap") {
  Rng rng(31);
  std::vector<Vec> thetas{{1.0, 0.0}, {0.0, 1.0}};
  const int T = 20000;
  std::vector<RegretStep> trace;
  double gap_sum = 0.0;
  for (int t = 0; t < T; ++t) {
    Vec y{rng.uniform01(), rng.uniform01()};
    double a = imb::dot(thetas[0], y), b = imb::dot(thetas[1], y);
    gap_sum += std::fabs(a - b);
    int pick = rng.uniform_int(0, 1);
    trace.push_back({y, pick == 0 ? a : b});  // noise-free
  }
  auto regret = imb::empirical_regret(trace, thetas);
  double slope = regret.back() / T;
  double expected = (gap_sum / T) / 2.0;
  CHECK(slope == Catch::Approx(expected).epsilon(0.1));

  // noise-free per-round gaps are nonnegative, so the curve is nondecreasing
  for (std::size_t i = 1; i < regret.size(); ++i)
    CHECK(regret[i] >= regret[i - 1] - 1e-12);
}

TEST_CASE("plot data export writes full and tail files") {
  std::vector<imb::AggregateCurve> curves;
  for (const char* name : {"alpha", "bravo"}) {
    imb::AggregateCurve c;
    c.policy = name;
    for (int t = 1; t <= 120; ++t) {
      c.mean_cum.push_back(t * 1.5);
      c.std_cum.push_back(0.5);
    }
    curves.push_back(std::move(c));
  }
  auto dir = std::filesystem::temp_directory_path() / "imb_plotdata";
  std::filesystem::remove_all(dir);
  imb::export_plot_data(curves, dir.string(), true);

  auto count_rows = [](const std::string& path) {
    std::ifstream in(path);
    std::string line;
    int rows = -1;  // skip header
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    return rows;
  };
  CHECK(count_rows((dir / "curves.csv").string()) == 2 * 120);
  CHECK(count_rows((dir / "curves_tail50.csv").string()) == 2 * 50);

  // round column of the full export spans 1..T
  {
    std::ifstream in((dir / "curves.csv").string());
    std::string line;
    std::getline(in, line);  // header
    int expected_round = 1;
    while (std::getline(in, line)) {
      auto p1 = line.find(',');
      auto p2 = line.find(',', p1 + 1);
      int round = std::stoi(line.substr(p1 + 1, p2 - p1 - 1));
      CHECK(round == expected_round);
      expected_round = expected_round == 120 ? 1 : expected_round + 1;
    }
  }

  // SVG sanity: xml prolog, single svg root, balanced text tags
  std::ifstream svg((dir / "curves.svg").string());
  REQUIRE(svg);
  std::string body((std::istreambuf_iterator<char>(svg)), {});
  CHECK(body.rfind("<?xml", 0) == 0);
  CHECK(body.find("<svg ") != std::string::npos);
  CHECK(body.find("</svg>") == body.size() - 7);
  std::size_t opens = 0, closes = 0, pos = 0;
  while ((pos = body.find("<text", pos)) != std::string::npos) {
    ++opens;
    pos += 5;
  }
  pos = 0;
  while ((pos = body.find("</text>", pos)) != std::string::npos) {
    ++closes;
    pos += 7;
  }
  CHECK(opens == closes);

  // aggregate loader round-trips the exported data
  auto loaded = imb::load_aggregate_csv((dir / "curves.csv").string());
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].policy == "alpha");
  CHECK(loaded[0].mean_cum.size() == 120);
  CHECK(loaded[1].mean_cum[119] == Catch::Approx(180.0));
}

TEST_CASE("poisson fit csv honors the minimum sample rule") {
  std::vector<imb::SampleCell> cells;
  cells.push_back({"oracle", 0, "viral", std::vector<int>(40, 2)});
  cells.push_back({"oracle", 1, "normal", std::vector<int>(5, 1)});
  auto dir = std::filesystem::temp_directory_path() / "imb_fits";
  std::filesystem::create_directories(dir);
  std::string path = (dir / "poisson_fits.csv").string();
  imb::write_poisson_fits_csv(cells, path, 30);

  std::ifstream in(path);
  std::string header, row1, row2;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  CHECK(row1.find("oracle,0,viral,40,2,") == 0);
  CHECK(row2 == "oracle,1,normal,5,,");
}
