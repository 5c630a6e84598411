#include "netspread/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "format.hpp"
#include "netspread/kernel.hpp"
#include "netspread/meanfield.hpp"
#include "netspread/sim.hpp"

namespace netspread {

namespace {

using json = nlohmann::json;

// Distinguishes bad invocations (exit 2) from runtime failures (exit 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::string model = "example1";
  int n = 0;
  double tol = 1e-9;
  std::uint64_t seed = 1;
  std::string out = "netspread";
  bool gnuplot = false;
  std::string projection = "linear";

  Projection projection_rule() const { return projection == "nearest" ? Projection::Nearest : Projection::Linear; }
};

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  return f;
}

void write_json_file(const std::string& path, const json& doc) {
  auto f = open_output(path);
  f << doc.dump(2) << '\n';
}

void write_table_csv(const std::string& path, const ValueTable& v, const Policy& pol, bool with_value) {
  auto f = open_output(path);
  f << (with_value ? "m_index,m,z,value,action\n" : "m_index,m,z,action\n");
  for (int i = 0; i < v.grid_size; ++i) {
    for (int z = 0; z < v.z_states; ++z) {
      f << i << ',' << detail::format_number(v.point(i)) << ',' << z << ',';
      if (with_value) f << detail::format_number(v(i, z)) << ',';
      f << pol(i, z) << '\n';
    }
  }
}

void write_policy_gnuplot(const std::string& path, const std::string& policy_csv) {
  auto f = open_output(path);
  f << "set datafile separator ','\n"
    << "set xlabel 'infected fraction m'\n"
    << "set ylabel 'adversary state z'\n"
    << "set cblabel 'action'\n"
    << "plot '" << policy_csv << "' every ::1 using 2:3:4 with points pt 5 palette notitle\n";
}

json model_metadata(const ModelSpec& spec) {
  return {{"n", spec.n()},
          {"beta", spec.beta()},
          {"rho1", spec.rho1()},
          {"z1_dist", spec.z1_dist()},
          {"z1_dist_defaulted", spec.z1_defaulted()}};
}

ModelSpec load(const GlobalOptions& g) { return load_model_file(g.model, g.n); }

int cmd_solve(const GlobalOptions& g, std::ostream& out) {
  const ModelSpec spec = load(g);
  const TransitionKernel kern = build_kernel(spec);
  const SolveReport rep = solve_finite(kern, spec, {g.tol});
  write_table_csv(g.out + "_value.csv", rep.value, rep.policy, true);
  write_table_csv(g.out + "_policy.csv", rep.value, rep.policy, false);
  if (g.gnuplot) write_policy_gnuplot(g.out + "_policy.gp", g.out + "_policy.csv");

  std::vector<double> at_zero;
  for (int z = 0; z < spec.z_states(); ++z) at_zero.push_back(rep.value(0, z));
  const json summary = {{"J_star_n", optimal_cost(spec, rep.value)},
                        {"iterations", rep.iterations},
                        {"final_sup_norm_delta", rep.final_sup_norm_delta},
                        {"epsilon_optimality", rep.epsilon_optimality},
                        {"value_at_m0", at_zero},
                        {"model", model_metadata(spec)}};
  write_json_file(g.out + "_summary.json", summary);
  out << summary.dump(2) << '\n';
  return 0;
}

int cmd_solve_inf(const GlobalOptions& g, int grid, std::ostream& out) {
  const ModelSpec spec = load(g);
  const int points = grid > 0 ? grid : spec.n() + 1;
  if (points < 2) throw UsageError("--grid must be at least 2");
  const SolveReport rep = solve_meanfield_quantized(spec, points, {g.tol}, g.projection_rule());
  write_table_csv(g.out + "_value.csv", rep.value, rep.policy, true);
  write_table_csv(g.out + "_policy.csv", rep.value, rep.policy, false);
  if (g.gnuplot) write_policy_gnuplot(g.out + "_policy.gp", g.out + "_policy.csv");

  const int q1 = nearest_grid_index(spec.rho1(), points);
  const json summary = {{"EVQ", quantized_initial_value(spec, rep.value)},
                        {"grid", points},
                        {"projection", g.projection},
                        {"q1_index", q1},
                        {"q1", rep.value.point(q1)},
                        {"iterations", rep.iterations},
                        {"final_sup_norm_delta", rep.final_sup_norm_delta},
                        {"epsilon_optimality", rep.epsilon_optimality},
                        {"model", model_metadata(spec)}};
  write_json_file(g.out + "_summary.json", summary);
  out << summary.dump(2) << '\n';
  return 0;
}

struct SimulateOptions {
  int rollouts = 1000;
  int horizon = 0;
  double tail = 1e-3;
  std::string mode = "aggregate";
  std::string policy = "finite";
  int action = 1;
  int trajectories = 1;
};

int cmd_simulate(const GlobalOptions& g, const SimulateOptions& o, std::ostream& out) {
  const ModelSpec spec = load(g);
  const TransitionKernel kern = build_kernel(spec);

  PolicySource source;
  if (o.policy == "finite") {
    source = PolicySource::finite(solve_finite(kern, spec, {g.tol}).policy);
  } else if (o.policy == "meanfield") {
    source = PolicySource::meanfield(
        solve_meanfield_quantized(spec, spec.n() + 1, {g.tol}, g.projection_rule()).policy);
  } else {
    if (o.action < 1 || o.action > spec.num_actions()) throw UsageError("--action outside the model's action set");
    source = PolicySource::fixed(o.action);
  }

  SimConfig cfg;
  cfg.seed = g.seed;
  cfg.rollouts = o.rollouts;
  cfg.horizon = o.horizon > 0 ? o.horizon : certified_horizon(spec.beta(), tabulate(spec).max_cost(), o.tail);
  cfg.mode = o.mode == "agent" ? SimMode::AgentLevel : SimMode::AggregateLevel;
  cfg.keep_trajectories = std::max(1, o.trajectories);
  const SimResult res = simulate(spec, kern, source, cfg);

  {
    auto f = open_output(g.out + "_trajectory.csv");
    write_trajectory_csv(f, res.trajectories.front());
  }
  for (std::size_t r = 1; r < res.trajectories.size(); ++r) {
    auto f = open_output(g.out + "_trajectory_" + std::to_string(r) + ".csv");
    write_trajectory_csv(f, res.trajectories[r]);
  }
  if (g.gnuplot) {
    auto f = open_output(g.out + "_trajectory.gp");
    f << "set datafile separator ','\nset xlabel 't'\nset y2tics\n"
      << "plot '" << g.out << "_trajectory.csv' every ::1 using 1:2 with steps title 'm', "
      << "'' every ::1 using 1:3 with steps axes x1y2 title 'z', "
      << "'' every ::1 using 1:4 with points axes x1y2 title 'u'\n";
  }
  json doc = estimate_to_json(res.estimate);
  doc["mode"] = o.mode;
  doc["policy"] = o.policy;
  doc["model"] = model_metadata(spec);
  write_json_file(g.out + "_estimate.json", doc);
  out << doc.dump(2) << '\n';
  return 0;
}

int cmd_sweep(const GlobalOptions& g, const std::vector<int>& ns, std::ostream& out) {
  if (ns.empty()) throw UsageError("--ns must list at least one population size");
  if (!std::is_sorted(ns.begin(), ns.end()) || std::adjacent_find(ns.begin(), ns.end()) != ns.end()) {
    throw UsageError("--ns must be strictly ascending");
  }
  const ModelSpec base = load(g);
  const auto rows = run_sweep(base, ns, {g.tol}, g.projection_rule());
  {
    auto f = open_output(g.out + "_sweep.csv");
    write_sweep_csv(f, rows);
  }
  json doc = sweep_to_json(rows);
  doc["tol"] = g.tol;
  doc["projection"] = g.projection;
  doc["model"] = model_metadata(base);
  write_json_file(g.out + "_sweep.json", doc);
  if (g.gnuplot) {
    auto f = open_output(g.out + "_sweep.gp");
    f << "set datafile separator ','\nset xlabel 'n'\nset logscale x\n"
      << "plot '" << g.out << "_sweep.csv' every ::1 using 1:2 with linespoints title 'J*_n', "
      << "'' every ::1 using 1:3 with linespoints title 'E[V^Q(q1,z1)]'\n";
  }
  out << doc.dump(2) << '\n';
  return 0;
}

int cmd_check(const GlobalOptions& g, int resolution, const std::vector<int>& eps_ns, std::ostream& out) {
  json doc;
  bool ok = true;
  ModelSpec spec = [&] {
    try {
      return load(g);
    } catch (const ModelError& e) {
      doc = {{"model_ok", false}, {"error", e.what()}, {"pass", false}};
      out << doc.dump(2) << '\n';
      throw;
    }
  }();

  const TransitionKernel kern = build_kernel(spec);
  double worst_row = 0.0;
  for (int u = 1; u <= kern.num_actions(); ++u) {
    for (int z = 0; z < kern.z_states(); ++z) {
      for (int i = 0; i <= kern.n(); ++i) {
        double s = 0.0;
        for (double p : kern.row(u, z, i)) s += p;
        worst_row = std::max(worst_row, std::abs(s - 1.0));
      }
    }
  }
  const bool rows_ok = worst_row <= 1e-10;

  const LipschitzReport rep = estimate_lipschitz(spec, resolution);
  json eps = json::object();
  const std::vector<int> targets = eps_ns.empty() ? std::vector<int>{spec.n()} : eps_ns;
  for (int n : targets) eps[std::to_string(n)] = rep.assumption3_ok ? json(error_bound(rep, n)) : json(nullptr);

  ok = rows_ok && rep.assumption3_ok;
  doc = {{"model_ok", true},
         {"kernel_rows_ok", rows_ok},
         {"kernel_max_row_sum_error", worst_row},
         {"k0", rep.k0},
         {"k1", rep.k1},
         {"kc", rep.kc},
         {"beta", rep.beta},
         {"inverse_beta", 1.0 / rep.beta},
         {"assumption3_ok", rep.assumption3_ok},
         {"bound_constant", finite_or_null(rep.bound_constant)},
         {"mean_deviation_constant", rep.mean_deviation_constant},
         {"grid_resolution", rep.grid_resolution},
         {"lipschitz_are_lower_estimates", rep.lower_estimates},
         {"epsilon_at", eps},
         {"pass", ok}};
  out << doc.dump(2) << '\n';
  return ok ? 0 : 1;
}

int cmd_oracle_check(const GlobalOptions& g, std::ostream& out) {
  const ModelSpec spec = load(g);
  if (spec.n() > 12) throw UsageError("oracle-check enumerates 2^n outcomes; use --n 12 or smaller");
  const TransitionKernel kern = build_kernel(spec);
  double worst = 0.0;
  for (int u = 1; u <= spec.num_actions(); ++u) {
    for (int z = 0; z < spec.z_states(); ++z) {
      for (int i = 0; i <= spec.n(); ++i) {
        const auto oracle = oracle_kernel(spec, u, z, i);
        const auto row = kern.row(u, z, i);
        for (std::size_t j = 0; j < oracle.size(); ++j) worst = std::max(worst, std::abs(oracle[j] - row[j]));
      }
    }
  }
  const bool ok = worst <= 1e-12;
  const json doc = {{"n", spec.n()}, {"max_abs_deviation", worst}, {"tolerance", 1e-12}, {"pass", ok}};
  out << doc.dump(2) << '\n';
  return ok ? 0 : 1;
}

int cmd_dump_kernel(const GlobalOptions& g, std::ostream& out) {
  const ModelSpec spec = load(g);
  const std::string path = g.out + "_kernel.csv";
  auto f = open_output(path);
  write_kernel_csv(f, build_kernel(spec));
  out << "wrote " << path << '\n';
  return 0;
}

}  // namespace

std::vector<SweepRow> run_sweep(const ModelSpec& base, std::vector<int> ns, SolveOptions opts, Projection projection) {
  std::sort(ns.begin(), ns.end());
  std::vector<SweepRow> rows;
  for (int n : ns) {
    const ModelSpec spec = base.with_n(n);
    const auto start = std::chrono::steady_clock::now();
    const TransitionKernel kern = build_kernel(spec);
    const SolveReport finite = solve_finite(kern, spec, opts);
    const SolveReport quantized = solve_meanfield_quantized(spec, n + 1, opts, projection);
    const auto stop = std::chrono::steady_clock::now();

    SweepRow row;
    row.n = n;
    row.J_star_n = optimal_cost(spec, finite.value);
    row.EVQ = quantized_initial_value(spec, quantized.value);
    row.gap = std::abs(row.EVQ - row.J_star_n);
    row.solve_ms = std::chrono::duration_cast<std::chrono::milliseconds>(stop - start).count();
    row.epsilon_optimality = std::max(finite.epsilon_optimality, quantized.epsilon_optimality);
    const LipschitzReport rep = estimate_lipschitz(spec);
    row.error_bound = rep.assumption3_ok ? error_bound(rep, n) : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  using detail::format_number;
  out << "n,J_star_n,EVQ,gap,epsilon_optimality,error_bound\n";
  for (const SweepRow& r : rows) {
    out << r.n << ',' << format_number(r.J_star_n) << ',' << format_number(r.EVQ) << ',' << format_number(r.gap) << ','
        << format_number(r.epsilon_optimality) << ',';
    if (std::isfinite(r.error_bound)) out << format_number(r.error_bound);
    out << '\n';
  }
}

nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows) {
  json arr = json::array();
  for (const SweepRow& r : rows) {
    arr.push_back({{"n", r.n},
                   {"J_star_n", r.J_star_n},
                   {"EVQ", r.EVQ},
                   {"gap", r.gap},
                   {"solve_ms", r.solve_ms},
                   {"epsilon_optimality", r.epsilon_optimality},
                   {"error_bound", finite_or_null(r.error_bound)}});
  }
  return {{"rows", arr}};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal control of persistent infection spread over homogeneous networks", "netspread"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--model", g.model, "Model JSON file, or the built-in name 'example1'");
  app.add_option("--n", g.n, "Override the model's population size")->check(CLI::PositiveNumber);
  app.add_option("--tol", g.tol, "Value-iteration tolerance (sup norm)")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Simulation seed");
  app.add_option("--out", g.out, "Output file prefix");
  app.add_flag("--gnuplot", g.gnuplot, "Also write gnuplot scripts for the CSV outputs");
  app.add_option("--projection", g.projection, "Mean-field grid projection: linear | nearest")
      ->check(CLI::IsMember({"linear", "nearest"}));

  auto* solve = app.add_subcommand("solve", "Exact finite-population value iteration");
  // A positional model name, so `netspread solve example1 --n 200` works.
  solve->add_option("model", g.model, "Model JSON file or 'example1'");

  int grid = 0;
  auto* solve_inf = app.add_subcommand("solve-inf", "Quantized mean-field value iteration");
  solve_inf->add_option("model", g.model, "Model JSON file or 'example1'");
  solve_inf->add_option("--grid", grid, "Number of grid points (default n+1)");

  SimulateOptions so;
  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo estimate of the discounted cost");
  simulate_cmd->add_option("model", g.model, "Model JSON file or 'example1'");
  simulate_cmd->add_option("--rollouts", so.rollouts, "Number of rollouts")->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--horizon", so.horizon, "Rollout length (default: certified by --tail)");
  simulate_cmd->add_option("--tail", so.tail, "Bound on the truncated discounted tail")->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--mode", so.mode, "agent | aggregate")->check(CLI::IsMember({"agent", "aggregate"}));
  simulate_cmd->add_option("--policy", so.policy, "finite | meanfield | fixed")
      ->check(CLI::IsMember({"finite", "meanfield", "fixed"}));
  simulate_cmd->add_option("--action", so.action, "Action label for --policy fixed");
  simulate_cmd->add_option("--trajectories", so.trajectories, "Trajectory CSVs to write");

  std::vector<int> ns{25, 50, 100, 200, 400};
  auto* sweep = app.add_subcommand("sweep", "Finite vs. quantized mean-field value over population sizes");
  sweep->add_option("model", g.model, "Model JSON file or 'example1'");
  sweep->add_option("--ns", ns, "Population sizes, ascending")->delimiter(',');

  int resolution = 0;
  std::vector<int> eps_ns;
  auto* check = app.add_subcommand("check-assumptions", "Validate the model and audit the stability condition");
  check->add_option("model", g.model, "Model JSON file or 'example1'");
  check->add_option("--resolution", resolution, "Lipschitz grid points (default 10n+1)");
  check->add_option("--eps-n", eps_ns, "Population sizes at which to report the error bound")->delimiter(',');

  auto* oracle = app.add_subcommand("oracle-check", "Compare the kernel with brute-force enumeration (n <= 12)");
  oracle->add_option("model", g.model, "Model JSON file or 'example1'");

  auto* dump = app.add_subcommand("dump-kernel", "Write the transition kernel as CSV");
  dump->add_option("model", g.model, "Model JSON file or 'example1'");

  std::vector<const char*> argv;
  argv.push_back("netspread");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) return cmd_solve(g, out);
    if (solve_inf->parsed()) return cmd_solve_inf(g, grid, out);
    if (simulate_cmd->parsed()) return cmd_simulate(g, so, out);
    if (sweep->parsed()) return cmd_sweep(g, ns, out);
    if (check->parsed()) return cmd_check(g, resolution, eps_ns, out);
    if (oracle->parsed()) return cmd_oracle_check(g, out);
    if (dump->parsed()) return cmd_dump_kernel(g, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace netspread
