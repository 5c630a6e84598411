#pragma once

#include <vector>

#include "netspread/model.hpp"
#include "netspread/solver.hpp"

namespace netspread {

/// Infinite-population update p+ = (1-p) f0(u,p,z) + p (1 - f1(u,p,z)).
double macro_step(const ModelSpec& spec, int u, double p, int z);

struct MacroStep {
  double p = 0.0;
  int z = 0;
  int u = 0;
  double stage_cost = 0.0;
};

struct MacroTrajectory {
  double p1 = 0.0;
  std::vector<MacroStep> steps;
};

/// Drives the deterministic macro dynamics from p1 = rho1 along a given
/// adversary path, choosing u_t from a quantized mean-field policy at the
/// grid point nearest p_t.
MacroTrajectory propagate_macro(const ModelSpec& spec, const Policy& policy, const std::vector<int>& z_path,
                                int horizon);

/// Finite-difference Lipschitz estimates in m and the resulting stability
/// check. The constants are lower estimates of the true ones.
struct LipschitzReport {
  double k0 = 0.0;
  double k1 = 0.0;
  double kc = 0.0;
  double beta = 0.0;
  int grid_resolution = 0;
  bool assumption3_ok = false;
  /// kc / ((1-beta)(1-beta max(k0,k1))); NaN when the stability check fails.
  double bound_constant = 0.0;
  /// Constant C in E|m1 - p1| <= C / sqrt(n); max_p sqrt(p(1-p)) = 1/2.
  double mean_deviation_constant = 0.5;
  bool lower_estimates = true;

  double epsilon(int n) const;
};

/// `grid_resolution` points on [0,1]; pass 0 for the default 10 n + 1.
LipschitzReport estimate_lipschitz(const ModelSpec& spec, int grid_resolution = 0);

/// bound_constant * C / sqrt(n). Throws std::domain_error when the report
/// fails the stability check.
double error_bound(const LipschitzReport& report, int n);

}  // namespace netspread
