#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "netspread/kernel.hpp"
#include "netspread/model.hpp"

namespace netspread {

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValueKind { FinitePopulation, QuantizedMeanField };

/// Table over (grid index, adversary state), stored grid-major.
template <typename T>
struct GridTable {
  ValueKind kind = ValueKind::FinitePopulation;
  int grid_size = 0;
  int z_states = 0;
  std::vector<T> data;

  GridTable() = default;
  GridTable(ValueKind k, int grid, int zs, T fill = T{})
      : kind(k), grid_size(grid), z_states(zs), data(static_cast<std::size_t>(grid) * zs, fill) {}

  T& operator()(int i, int z) { return data[static_cast<std::size_t>(i) * z_states + z]; }
  const T& operator()(int i, int z) const { return data[static_cast<std::size_t>(i) * z_states + z]; }
  /// Grid point i / (grid_size - 1).
  double point(int i) const { return grid_size > 1 ? static_cast<double>(i) / (grid_size - 1) : 0.0; }
};

using ValueTable = GridTable<double>;
/// Action labels (1-based) per state.
using Policy = GridTable<int>;

struct SolveOptions {
  double tol = 1e-9;
  long max_iterations = 1'000'000;
};

struct SolveReport {
  long iterations = 0;
  double final_sup_norm_delta = 0.0;
  /// 2 beta delta / (1 - beta): sup-norm distance of the greedy policy's cost from optimal.
  double epsilon_optimality = 0.0;
  /// Sup-norm successive differences, one per iteration.
  std::vector<double> deltas;
  ValueTable value;
  Policy policy;
};

double sup_norm_distance(const ValueTable& a, const ValueTable& b);

/// One application of the finite-population Bellman operator. Ties go to the
/// lowest action label.
std::pair<ValueTable, Policy> bellman_backup(const TransitionKernel& kern, const ModelSpec& spec,
                                             const ValueTable& v);

/// Evaluation operator of a fixed stationary policy (no minimization).
ValueTable policy_backup(const TransitionKernel& kern, const ModelSpec& spec, const Policy& policy,
                         const ValueTable& v);

/// Value iteration from V = 0 until the successive sup-norm difference is <= tol.
SolveReport solve_finite(const TransitionKernel& kern, const ModelSpec& spec, SolveOptions opts = {});

/// E[V(m1, z1)] with m1 ~ Binomial(n, rho1)/n and z1 ~ z1_dist.
double optimal_cost(const ModelSpec& spec, const ValueTable& v);

/// Nearest grid index of p on {0, 1/(G-1), ..., 1}; exact midpoints go down.
int nearest_grid_index(double p, int grid_points);

/// How an off-grid mean-field successor is mapped back onto the grid.
///  Nearest: snap to the nearest point (midpoints go down).
///  Linear:  interpolate between the two enclosing points. On coarse grids a
///           small drift can round back onto the same point forever under
///           Nearest; Linear keeps that drift visible to the value function.
enum class Projection { Nearest, Linear };

/// Value iteration for the deterministic mean-field recursion restricted to a
/// uniform grid of `grid_points` points.
SolveReport solve_meanfield_quantized(const ModelSpec& spec, int grid_points, SolveOptions opts = {},
                                      Projection projection = Projection::Nearest);

/// E[V~(q1, z1)] where q1 is the grid point nearest rho1.
double quantized_initial_value(const ModelSpec& spec, const ValueTable& v);

}  // namespace netspread
