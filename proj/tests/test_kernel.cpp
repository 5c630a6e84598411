#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "netspread/kernel.hpp"
#include "netspread/sim.hpp"
#include "test_models.hpp"

using namespace netspread;

namespace {

// Direct log-gamma evaluation of each weight; independent of the ratio recurrence.
double log_gamma_weight(int n, int k, double p) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * std::log(p) +
                  (n - k) * std::log1p(-p));
}

// Enumeration with the infected agents at arbitrary positions given by `mask`.
std::vector<double> enumerate_with_mask(int n, unsigned mask, double f0, double f1) {
  std::vector<double> dist(static_cast<std::size_t>(n) + 1, 0.0);
  for (unsigned outcome = 0; outcome < (1u << n); ++outcome) {
    double prob = 1.0;
    int count = 0;
    for (int a = 0; a < n; ++a) {
      const bool inf_now = (mask >> a) & 1u;
      const bool inf_next = (outcome >> a) & 1u;
      const double p = inf_now ? 1.0 - f1 : f0;
      prob *= inf_next ? p : 1.0 - p;
      count += inf_next;
    }
    dist[static_cast<std::size_t>(count)] += prob;
  }
  return dist;
}

double max_abs_diff(std::span<const double> a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

}  // namespace

TEST_CASE("binomial_pmf") {
  CHECK(binomial_pmf(5, 0.0).weights == std::vector<double>{1, 0, 0, 0, 0, 0});
  CHECK(binomial_pmf(5, 1.0).weights == std::vector<double>{0, 0, 0, 0, 0, 1});
  CHECK(binomial_pmf(0, 0.3).weights == std::vector<double>{1});

  const auto half = binomial_pmf(2, 0.5).weights;
  CHECK(half[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(half[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(half[2] == doctest::Approx(0.25).epsilon(1e-15));

  const auto big = binomial_pmf(200, 0.15);
  double sum = 0.0;
  for (double w : big.weights) sum += w;
  CHECK(std::abs(sum - 1.0) <= 1e-12);
  const auto mode = std::max_element(big.weights.begin(), big.weights.end()) - big.weights.begin();
  CHECK(mode == 30);
  CHECK(mode == static_cast<long>(std::floor(201 * 0.15)));

  CHECK_THROWS_AS(binomial_pmf(3, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(binomial_pmf(-1, 0.5), std::invalid_argument);
}

TEST_CASE("binomial_pmf matches log-gamma evaluation") {
  for (int n : {1, 7, 30, 200, 1000}) {
    for (double p : {1e-6, 0.01, 0.15, 0.5, 0.8, 0.999}) {
      const auto w = binomial_pmf(n, p).weights;
      double sum = 0.0;
      for (int k = 0; k <= n; ++k) {
        const double ref = log_gamma_weight(n, k, p);
        sum += w[static_cast<std::size_t>(k)];
        CHECK(std::abs(w[static_cast<std::size_t>(k)] - ref) <= 1e-12 + 1e-9 * ref);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("convolve") {
  const auto coin = binomial_pmf(1, 0.5);
  const auto two = convolve(coin, coin);
  REQUIRE(two.size() == 3);
  CHECK(two[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(two[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(two[2] == doctest::Approx(0.25).epsilon(1e-15));

  const auto a = binomial_pmf(7, 0.37);
  CHECK(convolve(a, binomial_pmf(0, 0.9)) == a.weights);

  const auto c = convolve(binomial_pmf(2, 0.3), binomial_pmf(3, 0.7));
  REQUIRE(c.size() == 6);
  double sum = 0.0, mean = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    sum += c[k];
    mean += static_cast<double>(k) * c[k];
  }
  CHECK(std::abs(sum - 1.0) <= 1e-12);
  CHECK(mean == doctest::Approx(2.7).epsilon(1e-12));
}

TEST_CASE("kernel rows for example1") {
  const ModelSpec s = example1_model(10);
  const TransitionKernel k = build_kernel(s);
  const auto r = k.row(1, 0, 0);
  CHECK(r[0] == 1.0);
  for (std::size_t j = 1; j < r.size(); ++j) CHECK(r[j] == 0.0);

  const TransitionKernel k2 = build_kernel(example1_model(2));
  for (int z = 0; z < 5; ++z) {
    const auto row = k2.row(3, z, 2);
    CHECK(row[0] == doctest::Approx(0.64).epsilon(1e-14));
    CHECK(row[1] == doctest::Approx(0.32).epsilon(1e-14));
    CHECK(row[2] == doctest::Approx(0.04).epsilon(1e-14));
  }
}

TEST_CASE("interior row against enumeration") {
  const ModelSpec s = testing::uniform_model(3, 1, 1, "0.5", "0.5", "m");
  const auto row = build_kernel(s).row(1, 0, 1);
  const std::vector<double> expected{0.125, 0.375, 0.375, 0.125};
  CHECK(max_abs_diff(row, expected) <= 1e-15);
  CHECK(max_abs_diff(row, oracle_row(3, 1, 0.5, 0.5)) <= 1e-15);
}

TEST_CASE("rows are invariant to which agents are infected") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 6;
    const double f0 = unif(rng), f1 = unif(rng);
    const unsigned mask = static_cast<unsigned>(rng()) & ((1u << n) - 1);
    const int infected = __builtin_popcount(mask);
    const auto row = convolution_row(n, infected, f0, f1);
    CHECK(max_abs_diff(row, enumerate_with_mask(n, mask, f0, f1)) <= 1e-12);
  }
}

TEST_CASE("general convolution reproduces the boundary formulas") {
  for (int n : {1, 5, 50, 200}) {
    for (double f0 : {0.0, 0.2, 0.75, 1.0}) {
      for (double f1 : {0.0, 0.3, 1.0}) {
        CHECK(max_abs_diff(convolution_row(n, 0, f0, f1), all_susceptible_row(n, f0)) <= 1e-12);
        CHECK(max_abs_diff(convolution_row(n, n, f0, f1), all_infected_row(n, f1)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("kernel mean equals the macro map on random models") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const ModelSpec s = testing::random_model(5 + 7 * trial, 2, 3, rng);
    const TransitionKernel k = build_kernel(s);
    const GridTables t = tabulate(s);
    for (int u = 1; u <= 2; ++u) {
      for (int z = 0; z < 3; ++z) {
        for (int i = 0; i <= s.n(); ++i) {
          const auto row = k.row(u, z, i);
          double mean = 0.0, sum = 0.0;
          for (std::size_t j = 0; j < row.size(); ++j) {
            CHECK(row[j] >= 0.0);
            sum += row[j];
            mean += static_cast<double>(j) / s.n() * row[j];
          }
          const double m = static_cast<double>(i) / s.n();
          const std::size_t idx = t.index(u, z, i);
          CHECK(std::abs(sum - 1.0) <= 1e-10);
          CHECK(std::abs(mean - ((1 - m) * t.f0[idx] + m * (1 - t.f1[idx]))) <= 1e-10);
        }
      }
    }
  }
}

TEST_CASE("joint step distribution") {
  const ModelSpec s = example1_model(20);
  const TransitionKernel k = build_kernel(s);
  const int zs = s.z_states();
  for (int u = 1; u <= 3; ++u) {
    for (int z = 0; z < zs; ++z) {
      for (int i : {0, 7, 20}) {
        const auto table = joint_step_distribution(k, i, z, u);
        double sum = 0.0;
        for (double p : table) sum += p;
        CHECK(std::abs(sum - 1.0) <= 1e-10);
        for (int j = 0; j <= 20; ++j) {
          for (int zn = 0; zn < zs; ++zn) {
            CHECK(table[static_cast<std::size_t>(j * zs + zn)] ==
                  doctest::Approx(s.z_transition(u, z, zn) * k(u, z, i, j)));
          }
        }
      }
    }
  }
  auto mass_on = [&](const std::vector<double>& table, int zn) {
    double m = 0.0;
    for (int j = 0; j <= 20; ++j) m += table[static_cast<std::size_t>(j * zs + zn)];
    return m;
  };
  CHECK(mass_on(joint_step_distribution(k, 10, 3, 2), 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mass_on(joint_step_distribution(k, 10, 4, 1), 4) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("kernel CSV dump") {
  const TransitionKernel k = build_kernel(example1_model(3));
  std::ostringstream os;
  write_kernel_csv(os, k);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# ", 0) == 0);
  CHECK(line.find("1 - f1") != std::string::npos);
  std::getline(in, line);
  CHECK(line == "u,z,m_index,mplus_index,probability");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::stod(line.substr(line.rfind(',') + 1)) >= 1e-15);
  }
  // u=1, z=0, m=0 is a point mass; all rows together can't exceed 3*5*4*4.
  CHECK(rows > 0);
  CHECK(rows < 3 * 5 * 4 * 4);
}
