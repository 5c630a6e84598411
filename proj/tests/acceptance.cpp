// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "netspread/cli.hpp"
#include "netspread/kernel.hpp"
#include "netspread/meanfield.hpp"
#include "netspread/sim.hpp"
#include "netspread/solver.hpp"
#include "test_models.hpp"

using namespace netspread;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail.clear();
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// 1. build_kernel rows vs. 2^n enumeration on random f0/f1 tables.
Outcome kernel_oracle_equivalence() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double worst = 0.0;
  for (int table = 0; table < 200; ++table) {
    const int n = 1 + table % 4;
    const int actions = 2, zs = 3;
    GridTables t(n, actions, zs);
    for (std::size_t k = 0; k < t.f0.size(); ++k) {
      // Mix interior values with exact 0/1 endpoints.
      t.f0[k] = table % 10 == 0 ? std::round(unif(rng)) : unif(rng);
      t.f1[k] = table % 10 == 5 ? std::round(unif(rng)) : unif(rng);
    }
    std::vector<SquareMatrix> zk(actions, testing::identity_kernel(zs));
    const TransitionKernel kern = build_kernel(t, zk);
    for (int u = 1; u <= actions; ++u) {
      for (int z = 0; z < zs; ++z) {
        for (int i = 0; i <= n; ++i) {
          const std::size_t idx = t.index(u, z, i);
          const auto oracle = oracle_row(n, i, t.f0[idx], t.f1[idx]);
          const auto row = kern.row(u, z, i);
          for (std::size_t j = 0; j < oracle.size(); ++j) worst = std::max(worst, std::abs(row[j] - oracle[j]));
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  o.require(worst <= 1e-12, "max deviation " + fmt("%.3g", worst) + " > 1e-12");
  o.require(secs < 10.0, "runtime " + fmt("%.2f", secs) + " s >= 10 s");
  if (o.pass) o.detail = "max |row - oracle| = " + fmt("%.3g", worst) + " over 200 tables, " + fmt("%.2f s", secs);
  return o;
}

// 2. Row sums and boundary rows, example1 at n = 10 and 200.
Outcome stochasticity_and_boundary() {
  Outcome o;
  double worst_sum = 0.0, worst_boundary = 0.0;
  for (int n : {10, 200}) {
    const ModelSpec s = example1_model(n);
    const TransitionKernel k = build_kernel(s);
    for (int u = 1; u <= 3; ++u) {
      for (int z = 0; z < 5; ++z) {
        for (int i = 0; i <= n; ++i) {
          double sum = 0.0;
          for (double p : k.row(u, z, i)) {
            sum += p;
            o.require(p >= 0.0, "negative kernel entry");
          }
          worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
        }
        const Dynamics d0 = eval_dynamics(s, u, 0.0, z);
        const Dynamics d1 = eval_dynamics(s, u, 1.0, z);
        const auto general0 = convolution_row(n, 0, d0.f0, d0.f1);
        const auto general1 = convolution_row(n, n, d1.f0, d1.f1);
        const auto formula0 = binomial_pmf(n, d0.f0).weights;
        const auto formula1 = binomial_pmf(n, 1.0 - d1.f1).weights;
        const auto row0 = k.row(u, z, 0);
        const auto row1 = k.row(u, z, n);
        for (int j = 0; j <= n; ++j) {
          const auto jj = static_cast<std::size_t>(j);
          worst_boundary = std::max({worst_boundary, std::abs(general0[jj] - formula0[jj]),
                                     std::abs(general1[jj] - formula1[jj]), std::abs(row0[jj] - formula0[jj]),
                                     std::abs(row1[jj] - formula1[jj])});
        }
      }
    }
  }
  o.require(worst_sum <= 1e-10, "row sum error " + fmt("%.3g", worst_sum));
  o.require(worst_boundary <= 1e-12, "boundary mismatch " + fmt("%.3g", worst_boundary));
  if (o.pass) {
    o.detail = "max |row sum - 1| = " + fmt("%.3g", worst_sum) + ", max boundary deviation = " + fmt("%.3g", worst_boundary);
  }
  return o;
}

// 3. Kernel mean equals the macro map, example1 n = 200.
Outcome kernel_mean_identity() {
  Outcome o;
  const ModelSpec s = example1_model(200);
  const TransitionKernel k = build_kernel(s);
  double worst = 0.0;
  for (int u = 1; u <= 3; ++u) {
    for (int z = 0; z < 5; ++z) {
      for (int i = 0; i <= 200; ++i) {
        const double m = i / 200.0;
        const Dynamics d = eval_dynamics(s, u, m, z);
        const auto row = k.row(u, z, i);
        double mean = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) mean += static_cast<double>(j) / 200.0 * row[j];
        worst = std::max(worst, std::abs(mean - ((1 - m) * d.f0 + m * (1 - d.f1))));
      }
    }
  }
  o.require(worst <= 1e-10, "max deviation " + fmt("%.3g", worst));
  if (o.pass) o.detail = "max |E[m+] - macro map| = " + fmt("%.3g", worst);
  return o;
}

// 4. Contraction, constant-cost fixed point, and the absorbing m = 0 state.
Outcome solver_properties() {
  Outcome o;
  std::mt19937_64 rng(4);
  double worst_ratio = 0.0;
  double worst_iterate_excess = 0.0;
  for (int model = 0; model < 50; ++model) {
    std::uniform_real_distribution<double> beta_dist(0.3, 0.95);
    const ModelSpec s = testing::random_model(2 + model % 15, 1 + model % 3, 1 + model % 4, rng, beta_dist(rng));
    const TransitionKernel k = build_kernel(s);
    const SolveReport rep = solve_finite(k, s, {1e-9});
    for (std::size_t t = 1; t < rep.deltas.size(); ++t) {
      worst_iterate_excess =
          std::max(worst_iterate_excess, rep.deltas[t] - (s.beta() + 1e-12) * rep.deltas[t - 1]);
    }
    // Operator-level factor on random pairs well away from roundoff.
    std::uniform_real_distribution<double> val(0.0, 50.0);
    for (int pair = 0; pair < 5; ++pair) {
      ValueTable v(ValueKind::FinitePopulation, s.n() + 1, s.z_states()), w = v;
      for (double& x : v.data) x = val(rng);
      for (double& x : w.data) x = val(rng);
      const double ratio =
          sup_norm_distance(bellman_backup(k, s, v).first, bellman_backup(k, s, w).first) / sup_norm_distance(v, w);
      worst_ratio = std::max(worst_ratio, ratio - s.beta());
    }
  }
  o.require(worst_ratio <= 1e-12, "operator contraction factor exceeds beta by " + fmt("%.3g", worst_ratio));
  o.require(worst_iterate_excess <= 1e-12, "iterate deltas exceed beta*previous by " + fmt("%.3g", worst_iterate_excess));

  // Constant cost, single action: V = c / (1 - beta). The successive-difference
  // threshold is converted so the returned values are within `tol` of V*.
  const double tol = 1e-9;
  double worst_fixed = 0.0;
  for (double beta : {0.5, 0.9, 0.95}) {
    for (double c : {0.0, 1.0, 3.7}) {
      const ModelSpec s = testing::uniform_model(9, 1, 3, "0.2 + 0.3*m", "0.5*m^2", testing::number(c), beta);
      const SolveReport rep = solve_finite(build_kernel(s), s, {tol * (1 - beta) / beta});
      for (double x : rep.value.data) worst_fixed = std::max(worst_fixed, std::abs(x - c / (1 - beta)));
    }
  }
  o.require(worst_fixed <= tol, "constant-cost fixed point off by " + fmt("%.3g", worst_fixed));

  double worst_zero = 0.0;
  for (int n : {1, 7, 50, 200}) {
    const ModelSpec s = example1_model(n);
    const SolveReport rep = solve_finite(build_kernel(s), s, {tol});
    for (int z = 0; z < 5; ++z) {
      worst_zero = std::max(worst_zero, rep.value(0, z));
      o.require(rep.policy(0, z) == 1, "policy(0," + std::to_string(z) + ") != 1 at n=" + std::to_string(n));
    }
  }
  o.require(worst_zero <= 10 * tol / (1 - 0.9), "V(0,z) = " + fmt("%.3g", worst_zero));
  if (o.pass) {
    o.detail = "contraction excess " + fmt("%.3g", worst_ratio) + ", |V - c/(1-beta)| <= " + fmt("%.3g", worst_fixed) +
               ", max V(0,z) = " + fmt("%.3g", worst_zero);
  }
  return o;
}

// 5. Lipschitz audit for example1.
Outcome assumption_audit() {
  Outcome o;
  const LipschitzReport rep = estimate_lipschitz(example1_model(200));
  o.require(std::abs(rep.k0 - 1.0) <= 1e-6, "k0 = " + fmt("%.12g", rep.k0));
  o.require(rep.k1 == 0.0, "k1 = " + fmt("%.12g", rep.k1));
  o.require(std::abs(rep.kc - 3.8) <= 1e-9, "kc = " + fmt("%.12g", rep.kc));
  o.require(rep.assumption3_ok && std::max(rep.k0, rep.k1) < 1 / 0.9, "stability check failed");
  o.require(std::abs(rep.bound_constant - 380.0) <= 1e-6, "bound constant = " + fmt("%.12g", rep.bound_constant));
  const double eps = error_bound(rep, 200);
  o.require(std::abs(eps - 380.0 / (2 * std::sqrt(200.0))) <= 1e-6, "error_bound(200) = " + fmt("%.12g", eps));
  if (o.pass) {
    o.detail = "k0=" + fmt("%.9g", rep.k0) + " k1=" + fmt("%g", rep.k1) + " kc=" + fmt("%.12g", rep.kc) +
               " constant=" + fmt("%.9g", rep.bound_constant) + " eps(200)=" + fmt("%.6f", eps);
  }
  return o;
}

// 6. Monte Carlo under the optimal finite policy vs. E[V(m1, z1)].
Outcome monte_carlo_consistency() {
  Outcome o;
  const auto t0 = Clock::now();
  const ModelSpec s = example1_model(200);
  const TransitionKernel k = build_kernel(s);
  const SolveReport rep = solve_finite(k, s, {1e-9});
  const double j_star = optimal_cost(s, rep.value);
  const int horizon = certified_horizon(s.beta(), 8.8, 1e-3);
  o.require(std::pow(0.9, horizon) * 8.8 / 0.1 <= 1e-3, "horizon not certified");
  const SimResult sim = simulate(s, k, PolicySource::finite(rep.policy), {20190710, 10000, horizon, SimMode::AgentLevel, 0});
  const double diff = std::abs(sim.estimate.mean - j_star);
  const double allowed = 3 * sim.estimate.standard_error + 1e-3;
  const double secs = seconds_since(t0);
  o.require(diff <= allowed, "|mean - J*| = " + fmt("%.4g", diff) + " > " + fmt("%.4g", allowed));
  o.require(secs < 120.0, "runtime " + fmt("%.1f s", secs));
  if (o.pass) {
    o.detail = "J* = " + fmt("%.6f", j_star) + ", MC = " + fmt("%.6f", sim.estimate.mean) + " +- " +
               fmt("%.4f", sim.estimate.standard_error) + " (H=" + std::to_string(horizon) + ", " + fmt("%.1f s)", secs);
  }
  return o;
}

// 7. Finite vs. quantized mean-field gap over n.
Outcome sweep_trend() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto rows = run_sweep(example1_model(25), {25, 50, 100, 200, 400}, {1e-9});
  const double secs = seconds_since(t0);
  std::string gaps;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    gaps += (r ? ", " : "") + std::to_string(rows[r].n) + ":" + fmt("%.4f", rows[r].gap);
    if (r > 0) {
      o.require(rows[r].gap <= 1.1 * rows[r - 1].gap,
                "gap rises from n=" + std::to_string(rows[r - 1].n) + " to n=" + std::to_string(rows[r].n));
    }
    o.require(std::isfinite(rows[r].error_bound) && rows[r].gap <= rows[r].error_bound + 2 * rows[r].epsilon_optimality,
              "gap exceeds the error envelope at n=" + std::to_string(rows[r].n));
  }
  o.require(rows.back().gap < rows.front().gap, "gap(400) >= gap(25)");
  o.require(secs < 300.0, "runtime " + fmt("%.1f s", secs));
  // Reported for reference: the same sweep with nearest-point snapping.
  std::string nearest;
  for (const SweepRow& r : run_sweep(example1_model(25), {25, 50, 100, 200, 400}, {1e-9}, Projection::Nearest)) {
    nearest += (nearest.empty() ? "" : ", ") + fmt("%.4f", r.gap);
  }
  o.detail = (o.pass ? "" : o.detail + " | ") + "gaps " + gaps + " (" + fmt("%.1f s", secs) +
             "; nearest-point projection gives " + nearest + ")";
  return o;
}

// 8. A seeded rollout at n = 200 written as CSV satisfies the trajectory invariants.
Outcome trajectory_csv() {
  Outcome o;
  const ModelSpec s = example1_model(200);
  const TransitionKernel k = build_kernel(s);
  const Policy pol = solve_finite(k, s, {1e-9}).policy;
  const SimResult sim = simulate(s, k, PolicySource::finite(pol), {2, 1, 60, SimMode::AgentLevel, 1});
  const std::string path = "acceptance_trajectory.csv";
  {
    std::ofstream f(path);
    write_trajectory_csv(f, sim.trajectories.front());
  }
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  o.require(line == "t,m,z,u,stage_cost", "bad header '" + line + "'");
  int expected_t = 1;
  double discounted = 0.0, weight = 1.0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) {
      o.require(false, "row with " + std::to_string(cells.size()) + " columns");
      break;
    }
    const int t = std::stoi(cells[0]);
    const double m = std::stod(cells[1]);
    const int z = std::stoi(cells[2]);
    const int u = std::stoi(cells[3]);
    const double cost = std::stod(cells[4]);
    o.require(t == expected_t++, "non-consecutive t");
    const double scaled = m * 200;
    o.require(m >= 0 && m <= 1 && std::abs(scaled - std::round(scaled)) < 1e-9, "m off the grid");
    o.require(z >= 0 && z < 5 && u >= 1 && u <= 3, "state or action out of range");
    const int mi = static_cast<int>(std::lround(scaled));
    o.require(u == pol(mi, z), "action differs from the optimal policy");
    o.require(cost == eval_dynamics(s, u, mi / 200.0, z).cost, "stage cost differs from c(u,m,z)");
    discounted += weight * cost;
    weight *= s.beta();
  }
  o.require(expected_t == 61, "expected 60 rows");
  o.require(std::abs(discounted - sim.trajectories.front().discounted_cost) <= 1e-12, "discounted cost mismatch");
  if (o.pass) o.detail = "60 rows in " + path + ", discounted cost " + fmt("%.6f", discounted);
  return o;
}

// 9. One-step agent-level and aggregate-level histograms vs. the analytic row.
Outcome simulator_equivalence() {
  Outcome o;
  const ModelSpec s = example1_model(50);
  const TransitionKernel k = build_kernel(s);
  std::mt19937_64 rng(9);
  double worst = 0.0;
  for (int probe = 0; probe < 5; ++probe) {
    const int m = std::uniform_int_distribution<int>(0, 50)(rng);
    const int u = std::uniform_int_distribution<int>(1, 3)(rng);
    const int z = std::uniform_int_distribution<int>(0, 4)(rng);
    const auto row = k.row(u, z, m);
    const std::vector<double> exact(row.begin(), row.end());
    const auto agent = one_step_histogram(s, k, SimMode::AgentLevel, u, z, m, 100000, 1000 + probe);
    const auto aggregate = one_step_histogram(s, k, SimMode::AggregateLevel, u, z, m, 100000, 2000 + probe);
    const double tv_a = total_variation(agent, exact);
    const double tv_g = total_variation(aggregate, exact);
    const double tv_ag = total_variation(agent, aggregate);
    worst = std::max({worst, tv_a, tv_g, tv_ag});
    o.require(tv_a <= 0.02 && tv_g <= 0.02 && tv_ag <= 0.02,
              "TV too large at (m=" + std::to_string(m) + ",u=" + std::to_string(u) + ",z=" + std::to_string(z) + ")");
  }
  if (o.pass) o.detail = "max TV distance " + fmt("%.4f", worst) + " over 5 probes";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 kernel oracle equivalence", kernel_oracle_equivalence},
      {"2 stochasticity and boundary rows", stochasticity_and_boundary},
      {"3 kernel-mean identity", kernel_mean_identity},
      {"4 solver properties", solver_properties},
      {"5 assumption audit (example1)", assumption_audit},
      {"6 Monte Carlo consistency", monte_carlo_consistency},
      {"7 population sweep trend", sweep_trend},
      {"8 trajectory CSV", trajectory_csv},
      {"9 agent/aggregate equivalence", simulator_equivalence},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s  [%s] %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
