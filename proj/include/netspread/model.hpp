#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "netspread/expression.hpp"

namespace netspread {

/// Invalid model document or instance.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Values within this distance outside [0,1] are treated as roundoff and clamped.
inline constexpr double kClampTolerance = 1e-12;

/// Dense row-major square matrix, used for the adversary kernels P(z+|z,u).
struct SquareMatrix {
  std::size_t size = 0;
  std::vector<double> data;

  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n) : size(n), data(n * n, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * size + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * size + c]; }
};

/// Infection probability, cure probability and stage cost for one action.
struct ActionModel {
  Expression f0;
  Expression f1;
  Expression cost;
  SquareMatrix z_kernel;
};

struct Dynamics {
  double f0 = 0.0;
  double f1 = 0.0;
  double cost = 0.0;
};

/// A validated problem instance. Actions are labelled 1..num_actions(),
/// adversary states 0..z_states()-1, matching the usual problem notation.
class ModelSpec {
 public:
  /// Validates every invariant eagerly, including the probability ranges of
  /// f0/f1 and the sign of the cost on the whole grid {0,1/n,..,1} x Z.
  ModelSpec(int n, double beta, double rho1, std::vector<double> z1_dist,
            std::vector<ActionModel> actions, bool z1_defaulted = false);

  int n() const { return n_; }
  double beta() const { return beta_; }
  double rho1() const { return rho1_; }
  const std::vector<double>& z1_dist() const { return z1_dist_; }
  bool z1_defaulted() const { return z1_defaulted_; }
  int num_actions() const { return static_cast<int>(actions_.size()); }
  int z_states() const { return static_cast<int>(z1_dist_.size()); }

  const ActionModel& action(int u) const;
  const std::vector<ActionModel>& actions() const { return actions_; }
  double z_transition(int u, int z, int z_next) const;

  /// Copy with a different population size, re-validated.
  ModelSpec with_n(int n) const;

 private:
  int n_;
  double beta_;
  double rho1_;
  std::vector<double> z1_dist_;
  std::vector<ActionModel> actions_;
  bool z1_defaulted_;
};

/// Evaluates f0, f1 and the stage cost at an arbitrary m in [0,1].
Dynamics eval_dynamics(const ModelSpec& spec, int u, double m, int z);

/// f0, f1 and cost tabulated on the grid i/n for every (u, z).
struct GridTables {
  int n = 0;
  int num_actions = 0;
  int z_states = 0;
  std::vector<double> f0;
  std::vector<double> f1;
  std::vector<double> cost;

  GridTables() = default;
  GridTables(int n, int num_actions, int z_states);

  std::size_t index(int u, int z, int i) const {
    return (static_cast<std::size_t>(u - 1) * z_states + z) * (n + 1) + i;
  }
  double max_cost() const;
};

GridTables tabulate(const ModelSpec& spec);

/// Parses a model document. The string "example1" loads the built-in instance.
/// `n_override > 0` replaces the document's population size.
ModelSpec load_model(const nlohmann::json& document, int n_override = 0);
ModelSpec load_model_file(const std::string& path_or_name, int n_override = 0);
nlohmann::json model_to_json(const ModelSpec& spec);

/// Rumor-control instance with three actions (no action, block, broadcast)
/// and five adversary levels.
ModelSpec example1_model(int n);

}  // namespace netspread
