#include "netspread/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace netspread {

double macro_step(const ModelSpec& spec, int u, double p, int z) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("macro_step: p outside [0,1]");
  const Dynamics d = eval_dynamics(spec, u, p, z);
  const double next = (1.0 - p) * d.f0 + p * (1.0 - d.f1);
  // A convex combination of probabilities; anything beyond roundoff is a bug.
  if (next < -kClampTolerance || next > 1.0 + kClampTolerance) {
    throw std::logic_error("macro_step left [0,1]");
  }
  return std::clamp(next, 0.0, 1.0);
}

MacroTrajectory propagate_macro(const ModelSpec& spec, const Policy& policy, const std::vector<int>& z_path,
                                int horizon) {
  if (horizon < 0 || static_cast<int>(z_path.size()) < horizon) {
    throw std::invalid_argument("propagate_macro: z path shorter than horizon");
  }
  MacroTrajectory traj;
  traj.p1 = spec.rho1();
  traj.steps.reserve(static_cast<std::size_t>(horizon));
  double p = traj.p1;
  for (int t = 0; t < horizon; ++t) {
    const int z = z_path[static_cast<std::size_t>(t)];
    const int u = policy(nearest_grid_index(p, policy.grid_size), z);
    traj.steps.push_back({p, z, u, eval_dynamics(spec, u, p, z).cost});
    p = macro_step(spec, u, p, z);
  }
  return traj;
}

double LipschitzReport::epsilon(int n) const { return error_bound(*this, n); }

LipschitzReport estimate_lipschitz(const ModelSpec& spec, int grid_resolution) {
  const int points = grid_resolution > 0 ? grid_resolution : 10 * spec.n() + 1;
  if (points < 2) throw std::invalid_argument("estimate_lipschitz: need at least two grid points");

  LipschitzReport rep;
  rep.beta = spec.beta();
  rep.grid_resolution = points;
  const double step = 1.0 / (points - 1);
  for (int u = 1; u <= spec.num_actions(); ++u) {
    for (int z = 0; z < spec.z_states(); ++z) {
      Dynamics prev = eval_dynamics(spec, u, 0.0, z);
      for (int k = 1; k < points; ++k) {
        const Dynamics cur = eval_dynamics(spec, u, static_cast<double>(k) / (points - 1), z);
        rep.k0 = std::max(rep.k0, std::abs(cur.f0 - prev.f0) / step);
        rep.k1 = std::max(rep.k1, std::abs(cur.f1 - prev.f1) / step);
        rep.kc = std::max(rep.kc, std::abs(cur.cost - prev.cost) / step);
        prev = cur;
      }
    }
  }
  const double k = std::max(rep.k0, rep.k1);
  rep.assumption3_ok = k < 1.0 / rep.beta;
  rep.bound_constant = rep.assumption3_ok ? rep.kc / ((1.0 - rep.beta) * (1.0 - rep.beta * k))
                                          : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

double error_bound(const LipschitzReport& report, int n) {
  if (!report.assumption3_ok) throw std::domain_error("error_bound: stability condition max(k0,k1) < 1/beta fails");
  if (n < 1) throw std::invalid_argument("error_bound: n must be positive");
  return report.bound_constant * report.mean_deviation_constant / std::sqrt(static_cast<double>(n));
}

}  // namespace netspread
