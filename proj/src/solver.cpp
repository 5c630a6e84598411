#include "netspread/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "netspread/meanfield.hpp"

namespace netspread {

namespace {

struct Successor {
  int z_next;
  double prob;
};

// Nonzero adversary transitions, indexed [(u-1) * Z + z].
template <typename ZProb>
std::vector<std::vector<Successor>> z_successors(int num_actions, int z_states, ZProb prob) {
  std::vector<std::vector<Successor>> out(static_cast<std::size_t>(num_actions) * z_states);
  for (int u = 1; u <= num_actions; ++u) {
    for (int z = 0; z < z_states; ++z) {
      auto& list = out[static_cast<std::size_t>(u - 1) * z_states + z];
      for (int zn = 0; zn < z_states; ++zn) {
        const double p = prob(u, z, zn);
        if (p > 0.0) list.push_back({zn, p});
      }
    }
  }
  return out;
}

// Action values Q(u, z, i) for the finite-population operator, laid out like GridTables.
class FiniteOperator {
 public:
  FiniteOperator(const TransitionKernel& kern, const ModelSpec& spec)
      : kern_(kern),
        beta_(spec.beta()),
        costs_(tabulate(spec)),
        succ_(z_successors(kern.num_actions(), kern.z_states(),
                           [&](int u, int z, int zn) { return kern.z_transition(u, z, zn); })) {
    if (spec.n() != kern.n() || spec.num_actions() != kern.num_actions() || spec.z_states() != kern.z_states()) {
      throw std::invalid_argument("kernel and model dimensions differ");
    }
  }

  std::vector<double> q_values(const ValueTable& v) const {
    const int n = kern_.n();
    const int zs = kern_.z_states();
    if (v.grid_size != n + 1 || v.z_states != zs) throw std::invalid_argument("value table does not match kernel grid");

    // Columns V(., z+) contiguous for the row dot products.
    std::vector<std::vector<double>> column(static_cast<std::size_t>(zs), std::vector<double>(n + 1));
    for (int j = 0; j <= n; ++j) {
      for (int z = 0; z < zs; ++z) column[static_cast<std::size_t>(z)][static_cast<std::size_t>(j)] = v(j, z);
    }

    std::vector<double> q(costs_.cost.size());
    for (int u = 1; u <= kern_.num_actions(); ++u) {
      for (int z = 0; z < zs; ++z) {
        const auto& succ = succ_[static_cast<std::size_t>(u - 1) * zs + z];
        for (int i = 0; i <= n; ++i) {
          const auto row = kern_.row(u, z, i);
          double expected = 0.0;
          for (const Successor& s : succ) {
            const auto& col = column[static_cast<std::size_t>(s.z_next)];
            double dot = 0.0;
            for (std::size_t j = 0; j < row.size(); ++j) dot += row[j] * col[j];
            expected += s.prob * dot;
          }
          const std::size_t k = costs_.index(u, z, i);
          q[k] = costs_.cost[k] + beta_ * expected;
        }
      }
    }
    return q;
  }

  const GridTables& tables() const { return costs_; }

 private:
  const TransitionKernel& kern_;
  double beta_;
  GridTables costs_;
  std::vector<std::vector<Successor>> succ_;
};

// Quantized mean-field operator. Each (u, z, k) has a deterministic successor,
// stored as a lower grid index plus the weight carried by the point above it
// (always 0 for nearest-point projection).
class QuantizedOperator {
 public:
  QuantizedOperator(const ModelSpec& spec, int grid_points, Projection projection)
      : grid_(grid_points),
        actions_(spec.num_actions()),
        zs_(spec.z_states()),
        beta_(spec.beta()),
        cost_(static_cast<std::size_t>(actions_) * zs_ * grid_points),
        next_(cost_.size()),
        upper_weight_(cost_.size(), 0.0),
        succ_(z_successors(actions_, zs_, [&](int u, int z, int zn) { return spec.z_transition(u, z, zn); })) {
    for (int u = 1; u <= actions_; ++u) {
      for (int z = 0; z < zs_; ++z) {
        for (int k = 0; k < grid_; ++k) {
          const double p = static_cast<double>(k) / (grid_ - 1);
          cost_[index(u, z, k)] = eval_dynamics(spec, u, p, z).cost;
          const double target = macro_step(spec, u, p, z);
          const std::size_t idx = index(u, z, k);
          if (projection == Projection::Nearest) {
            next_[idx] = nearest_grid_index(target, grid_);
          } else {
            const double scaled = target * (grid_ - 1);
            const int lo = std::clamp(static_cast<int>(std::floor(scaled)), 0, grid_ - 1);
            next_[idx] = lo;
            if (lo < grid_ - 1) upper_weight_[idx] = std::clamp(scaled - lo, 0.0, 1.0);
          }
        }
      }
    }
  }

  std::size_t index(int u, int z, int k) const {
    return (static_cast<std::size_t>(u - 1) * zs_ + z) * grid_ + k;
  }

  std::vector<double> q_values(const ValueTable& v) const {
    std::vector<double> q(cost_.size());
    for (int u = 1; u <= actions_; ++u) {
      for (int z = 0; z < zs_; ++z) {
        const auto& succ = succ_[static_cast<std::size_t>(u - 1) * zs_ + z];
        for (int k = 0; k < grid_; ++k) {
          const std::size_t idx = index(u, z, k);
          double expected = 0.0;
          const int lo = next_[idx];
          const double w = upper_weight_[idx];
          for (const Successor& s : succ) {
            double at = v(lo, s.z_next);
            if (w > 0.0) at = (1.0 - w) * at + w * v(lo + 1, s.z_next);
            expected += s.prob * at;
          }
          q[idx] = cost_[idx] + beta_ * expected;
        }
      }
    }
    return q;
  }

  int grid() const { return grid_; }
  int actions() const { return actions_; }
  int z_states() const { return zs_; }

 private:
  int grid_;
  int actions_;
  int zs_;
  double beta_;
  std::vector<double> cost_;
  std::vector<int> next_;
  std::vector<double> upper_weight_;
  std::vector<std::vector<Successor>> succ_;
};

// Both operators lay out Q as [((u-1) * Z + z) * grid + i].
std::pair<ValueTable, Policy> minimize(const std::vector<double>& q, ValueKind kind, int grid, int actions, int zs) {
  ValueTable v(kind, grid, zs);
  Policy pol(kind, grid, zs, 1);
  for (int i = 0; i < grid; ++i) {
    for (int z = 0; z < zs; ++z) {
      double best = std::numeric_limits<double>::infinity();
      int best_u = 1;
      for (int u = 1; u <= actions; ++u) {
        const double value = q[(static_cast<std::size_t>(u - 1) * zs + z) * grid + i];
        if (value < best) {
          best = value;
          best_u = u;
        }
      }
      v(i, z) = best;
      pol(i, z) = best_u;
    }
  }
  return {std::move(v), std::move(pol)};
}

template <typename Operator>
SolveReport iterate(const Operator& op, ValueKind kind, int grid, int actions, int zs, double beta, SolveOptions opts) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
  SolveReport rep;
  ValueTable v(kind, grid, zs, 0.0);
  for (;;) {
    if (rep.iterations >= opts.max_iterations) {
      throw ConvergenceError("value iteration did not reach tolerance within " + std::to_string(opts.max_iterations) +
                             " iterations");
    }
    auto [next, greedy] = minimize(op.q_values(v), kind, grid, actions, zs);
    const double delta = sup_norm_distance(next, v);
    ++rep.iterations;
    rep.deltas.push_back(delta);
    v = std::move(next);
    if (delta <= opts.tol) {
      rep.final_sup_norm_delta = delta;
      break;
    }
  }
  // Greedy policy with respect to the returned values.
  rep.policy = minimize(op.q_values(v), kind, grid, actions, zs).second;
  rep.value = std::move(v);
  rep.epsilon_optimality = 2.0 * beta * rep.final_sup_norm_delta / (1.0 - beta);
  return rep;
}

}  // namespace

double sup_norm_distance(const ValueTable& a, const ValueTable& b) {
  if (a.data.size() != b.data.size()) throw std::invalid_argument("sup_norm_distance: shape mismatch");
  double d = 0.0;
  for (std::size_t k = 0; k < a.data.size(); ++k) d = std::max(d, std::abs(a.data[k] - b.data[k]));
  return d;
}

std::pair<ValueTable, Policy> bellman_backup(const TransitionKernel& kern, const ModelSpec& spec,
                                             const ValueTable& v) {
  const FiniteOperator op(kern, spec);
  return minimize(op.q_values(v), ValueKind::FinitePopulation, kern.n() + 1, kern.num_actions(), kern.z_states());
}

ValueTable policy_backup(const TransitionKernel& kern, const ModelSpec& spec, const Policy& policy,
                         const ValueTable& v) {
  const FiniteOperator op(kern, spec);
  const auto q = op.q_values(v);
  const int grid = kern.n() + 1;
  const int zs = kern.z_states();
  ValueTable out(v.kind, grid, zs);
  for (int i = 0; i < grid; ++i) {
    for (int z = 0; z < zs; ++z) {
      out(i, z) = q[(static_cast<std::size_t>(policy(i, z) - 1) * zs + z) * grid + i];
    }
  }
  return out;
}

SolveReport solve_finite(const TransitionKernel& kern, const ModelSpec& spec, SolveOptions opts) {
  const FiniteOperator op(kern, spec);
  return iterate(op, ValueKind::FinitePopulation, kern.n() + 1, kern.num_actions(), kern.z_states(), spec.beta(),
                 opts);
}

double optimal_cost(const ModelSpec& spec, const ValueTable& v) {
  if (v.kind != ValueKind::FinitePopulation || v.grid_size != spec.n() + 1) {
    throw std::invalid_argument("optimal_cost: expects a finite-population value table for this model");
  }
  const auto m1 = binomial_pmf(spec.n(), spec.rho1()).weights;
  double total = 0.0;
  for (int z = 0; z < spec.z_states(); ++z) {
    const double pz = spec.z1_dist()[static_cast<std::size_t>(z)];
    if (pz == 0.0) continue;
    double inner = 0.0;
    for (int k = 0; k <= spec.n(); ++k) inner += m1[static_cast<std::size_t>(k)] * v(k, z);
    total += pz * inner;
  }
  return total;
}

int nearest_grid_index(double p, int grid_points) {
  if (grid_points < 2) throw std::invalid_argument("nearest_grid_index: need at least two grid points");
  const double scaled = std::clamp(p, 0.0, 1.0) * (grid_points - 1);
  const auto idx = static_cast<int>(std::ceil(scaled - 0.5));
  return std::clamp(idx, 0, grid_points - 1);
}

SolveReport solve_meanfield_quantized(const ModelSpec& spec, int grid_points, SolveOptions opts,
                                      Projection projection) {
  if (grid_points < 2) throw std::invalid_argument("solve_meanfield_quantized: grid_points must be >= 2");
  const QuantizedOperator op(spec, grid_points, projection);
  return iterate(op, ValueKind::QuantizedMeanField, grid_points, spec.num_actions(), spec.z_states(), spec.beta(),
                 opts);
}

double quantized_initial_value(const ModelSpec& spec, const ValueTable& v) {
  const int q1 = nearest_grid_index(spec.rho1(), v.grid_size);
  double total = 0.0;
  for (int z = 0; z < spec.z_states(); ++z) total += spec.z1_dist()[static_cast<std::size_t>(z)] * v(q1, z);
  return total;
}

}  // namespace netspread
