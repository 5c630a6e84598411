#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "netspread/kernel.hpp"
#include "netspread/model.hpp"
#include "netspread/solver.hpp"

namespace netspread {

enum class SimMode { AgentLevel, AggregateLevel };

/// Where actions come from during a rollout.
struct PolicySource {
  enum class Kind { Finite, MeanField, FixedAction };

  Kind kind = Kind::FixedAction;
  Policy policy;
  int action = 1;

  /// u_t = policy(m_t, z_t).
  static PolicySource finite(Policy p);
  /// u_t = policy(nearest(p_t), z_t) with p_t the macro recursion from rho1;
  /// never reads the realized m_t.
  static PolicySource meanfield(Policy p);
  static PolicySource fixed(int u);
};

struct SimConfig {
  std::uint64_t seed = 0;
  int rollouts = 1000;
  int horizon = 100;
  SimMode mode = SimMode::AggregateLevel;
  /// Number of leading rollouts whose trajectories are returned.
  int keep_trajectories = 0;
};

struct TrajectoryStep {
  int t = 0;  // 1-based
  int m_index = 0;
  double m = 0.0;
  int z = 0;
  int u = 0;
  double stage_cost = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  double discounted_cost = 0.0;
};

struct CostEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  int rollouts = 0;
  int horizon = 0;
  /// beta^horizon c_max / (1 - beta): bound on the truncated discounted tail.
  double tail_bound = 0.0;
  std::uint64_t seed = 0;
};

struct SimResult {
  CostEstimate estimate;
  std::vector<Trajectory> trajectories;
};

SimResult simulate(const ModelSpec& spec, const TransitionKernel& kern, const PolicySource& source,
                   const SimConfig& cfg);

/// Smallest horizon H with beta^H c_max / (1 - beta) <= tail_tolerance.
int certified_horizon(double beta, double c_max, double tail_tolerance);

/// Empirical distribution of the next infected count from a fixed (m, z, u),
/// estimated from `samples` one-step draws.
std::vector<double> one_step_histogram(const ModelSpec& spec, const TransitionKernel& kern, SimMode mode, int u,
                                       int z, int m_index, int samples, std::uint64_t seed);

double total_variation(const std::vector<double>& a, const std::vector<double>& b);

/// Exact next-count law by enumerating all 2^n agent outcomes (n <= 12).
std::vector<double> oracle_row(int n, int infected, double f0, double f1);
std::vector<double> oracle_kernel(const ModelSpec& spec, int u, int z, int m_index);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
nlohmann::json estimate_to_json(const CostEstimate& est);

}  // namespace netspread
