#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "netspread/model.hpp"
#include "netspread/solver.hpp"

namespace netspread {

struct SweepRow {
  int n = 0;
  double J_star_n = 0.0;
  double EVQ = 0.0;
  double gap = 0.0;
  long solve_ms = 0;
  double epsilon_optimality = 0.0;  // max over the two solves
  double error_bound = 0.0;         // NaN when the stability check fails
};

/// For each n: exact finite-population optimum vs. the quantized mean-field
/// value on the grid {0, 1/n, ..., 1}. Rows sorted by n.
std::vector<SweepRow> run_sweep(const ModelSpec& base, std::vector<int> ns, SolveOptions opts = {},
                                Projection projection = Projection::Linear);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows);

/// Entry point of the `netspread` tool. Exit codes: 0 success, 1 runtime
/// failure, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace netspread
