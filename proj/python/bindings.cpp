#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "netspread/cli.hpp"
#include "netspread/expression.hpp"
#include "netspread/kernel.hpp"
#include "netspread/meanfield.hpp"
#include "netspread/model.hpp"
#include "netspread/sim.hpp"
#include "netspread/solver.hpp"

namespace py = pybind11;
using namespace netspread;

namespace {

template <typename T>
py::array_t<T> table_array(const GridTable<T>& t) {
  py::array_t<T> out({t.grid_size, t.z_states});
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

template <typename T>
void bind_table(py::module_& m, const char* name) {
  py::class_<GridTable<T>>(m, name)
      .def_readonly("kind", &GridTable<T>::kind)
      .def_readonly("grid_size", &GridTable<T>::grid_size)
      .def_readonly("z_states", &GridTable<T>::z_states)
      .def("point", &GridTable<T>::point, py::arg("i"))
      .def("__getitem__",
           [](const GridTable<T>& t, std::pair<int, int> key) {
             if (key.first < 0 || key.first >= t.grid_size || key.second < 0 || key.second >= t.z_states) {
               throw py::index_error("grid index out of range");
             }
             return t(key.first, key.second);
           })
      .def("to_numpy", &table_array<T>, "Copy as an array of shape (grid_size, z_states).");
}

SimMode parse_mode(const std::string& s) {
  if (s == "agent") return SimMode::AgentLevel;
  if (s == "aggregate") return SimMode::AggregateLevel;
  throw py::value_error("mode must be 'agent' or 'aggregate'");
}

Projection parse_projection(const std::string& s) {
  if (s == "nearest") return Projection::Nearest;
  if (s == "linear") return Projection::Linear;
  throw py::value_error("projection must be 'nearest' or 'linear'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Optimal control of persistent infection spread: native core.";

  py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<EvalError>(m, "EvalError", PyExc_ArithmeticError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  py::class_<Dynamics>(m, "Dynamics")
      .def_readonly("f0", &Dynamics::f0)
      .def_readonly("f1", &Dynamics::f1)
      .def_readonly("cost", &Dynamics::cost)
      .def("__repr__", [](const Dynamics& d) {
        std::ostringstream os;
        os << "Dynamics(f0=" << d.f0 << ", f1=" << d.f1 << ", cost=" << d.cost << ")";
        return os.str();
      });

  py::class_<ModelSpec>(m, "ModelSpec")
      .def_property_readonly("n", &ModelSpec::n)
      .def_property_readonly("beta", &ModelSpec::beta)
      .def_property_readonly("rho1", &ModelSpec::rho1)
      .def_property_readonly("z1_dist", &ModelSpec::z1_dist)
      .def_property_readonly("z1_defaulted", &ModelSpec::z1_defaulted)
      .def_property_readonly("num_actions", &ModelSpec::num_actions)
      .def_property_readonly("z_states", &ModelSpec::z_states)
      .def("z_transition", &ModelSpec::z_transition, py::arg("u"), py::arg("z"), py::arg("z_next"))
      .def("with_n", &ModelSpec::with_n, py::arg("n"))
      .def("to_json", [](const ModelSpec& s) { return model_to_json(s).dump(); });

  m.def("example1", &example1_model, py::arg("n") = 200);
  m.def("load_model_file", &load_model_file, py::arg("path_or_name"), py::arg("n") = 0);
  m.def(
      "load_model_json", [](const std::string& text, int n) { return load_model(nlohmann::json::parse(text), n); },
      py::arg("text"), py::arg("n") = 0);
  m.def("eval_dynamics", &eval_dynamics, py::arg("model"), py::arg("u"), py::arg("m"), py::arg("z"));

  py::class_<TransitionKernel>(m, "TransitionKernel")
      .def_property_readonly("n", &TransitionKernel::n)
      .def_property_readonly("num_actions", &TransitionKernel::num_actions)
      .def_property_readonly("z_states", &TransitionKernel::z_states)
      .def(
          "row",
          [](const TransitionKernel& k, int u, int z, int i) {
            const auto r = k.row(u, z, i);
            py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(r.size())});
            std::copy(r.begin(), r.end(), out.mutable_data());
            return out;
          },
          py::arg("u"), py::arg("z"), py::arg("i"))
      .def("to_numpy",
           [](const TransitionKernel& k) {
             const int n = k.n();
             py::array_t<double> out({k.num_actions(), k.z_states(), n + 1, n + 1});
             double* dst = out.mutable_data();
             for (int u = 1; u <= k.num_actions(); ++u) {
               for (int z = 0; z < k.z_states(); ++z) {
                 for (int i = 0; i <= n; ++i) {
                   const auto r = k.row(u, z, i);
                   dst = std::copy(r.begin(), r.end(), dst);
                 }
               }
             }
             return out;
           },
           "Array of shape (actions, z_states, n+1, n+1); actions are 0-based here.");
  m.def("build_kernel", py::overload_cast<const ModelSpec&>(&build_kernel), py::arg("model"));
  m.def("binomial_pmf", [](int trials, double p) { return binomial_pmf(trials, p).weights; }, py::arg("trials"),
        py::arg("p"));

  py::enum_<ValueKind>(m, "ValueKind")
      .value("FinitePopulation", ValueKind::FinitePopulation)
      .value("QuantizedMeanField", ValueKind::QuantizedMeanField);
  bind_table<double>(m, "ValueTable");
  bind_table<int>(m, "Policy");

  py::class_<SolveReport>(m, "SolveReport")
      .def_readonly("iterations", &SolveReport::iterations)
      .def_readonly("final_sup_norm_delta", &SolveReport::final_sup_norm_delta)
      .def_readonly("epsilon_optimality", &SolveReport::epsilon_optimality)
      .def_readonly("deltas", &SolveReport::deltas)
      .def_readonly("value", &SolveReport::value)
      .def_readonly("policy", &SolveReport::policy);

  m.def(
      "solve_finite",
      [](const ModelSpec& spec, double tol, long max_iterations, const TransitionKernel* kern) {
        const SolveOptions opts{tol, max_iterations};
        py::gil_scoped_release release;
        if (kern) return solve_finite(*kern, spec, opts);
        return solve_finite(build_kernel(spec), spec, opts);
      },
      py::arg("model"), py::arg("tol") = 1e-9, py::arg("max_iterations") = 1'000'000, py::arg("kernel") = nullptr);
  m.def(
      "solve_meanfield",
      [](const ModelSpec& spec, int grid, double tol, const std::string& projection) {
        const Projection rule = parse_projection(projection);
        py::gil_scoped_release release;
        return solve_meanfield_quantized(spec, grid > 0 ? grid : spec.n() + 1, {tol}, rule);
      },
      py::arg("model"), py::arg("grid") = 0, py::arg("tol") = 1e-9, py::arg("projection") = "nearest");
  m.def("optimal_cost", &optimal_cost, py::arg("model"), py::arg("value"));
  m.def("quantized_initial_value", &quantized_initial_value, py::arg("model"), py::arg("value"));
  m.def("nearest_grid_index", &nearest_grid_index, py::arg("p"), py::arg("grid_points"));
  m.def("macro_step", &macro_step, py::arg("model"), py::arg("u"), py::arg("p"), py::arg("z"));

  py::class_<LipschitzReport>(m, "LipschitzReport")
      .def_readonly("k0", &LipschitzReport::k0)
      .def_readonly("k1", &LipschitzReport::k1)
      .def_readonly("kc", &LipschitzReport::kc)
      .def_readonly("beta", &LipschitzReport::beta)
      .def_readonly("grid_resolution", &LipschitzReport::grid_resolution)
      .def_readonly("stable", &LipschitzReport::assumption3_ok)
      .def_readonly("bound_constant", &LipschitzReport::bound_constant)
      .def("error_bound", [](const LipschitzReport& r, int n) { return error_bound(r, n); }, py::arg("n"));
  m.def("estimate_lipschitz", &estimate_lipschitz, py::arg("model"), py::arg("resolution") = 0);

  py::class_<CostEstimate>(m, "CostEstimate")
      .def_readonly("mean", &CostEstimate::mean)
      .def_readonly("stderr", &CostEstimate::standard_error)
      .def_readonly("rollouts", &CostEstimate::rollouts)
      .def_readonly("horizon", &CostEstimate::horizon)
      .def_readonly("tail_bound", &CostEstimate::tail_bound)
      .def_readonly("seed", &CostEstimate::seed);

  m.def(
      "simulate",
      [](const ModelSpec& spec, const py::object& policy, std::uint64_t seed, int rollouts, int horizon,
         const std::string& mode, const TransitionKernel* kern) {
        // An int selects a fixed action; a Policy is used according to its kind.
        PolicySource source;
        if (py::isinstance<py::int_>(policy)) {
          source = PolicySource::fixed(policy.cast<int>());
        } else {
          const Policy& p = policy.cast<const Policy&>();
          source = p.kind == ValueKind::FinitePopulation ? PolicySource::finite(p) : PolicySource::meanfield(p);
        }
        const SimConfig cfg{seed, rollouts, horizon, parse_mode(mode), 0};
        py::gil_scoped_release release;
        if (kern) return simulate(spec, *kern, source, cfg).estimate;
        return simulate(spec, build_kernel(spec), source, cfg).estimate;
      },
      py::arg("model"), py::arg("policy"), py::arg("seed") = 0, py::arg("rollouts") = 1000, py::arg("horizon") = 100,
      py::arg("mode") = "aggregate", py::arg("kernel") = nullptr);
  m.def("certified_horizon", &certified_horizon, py::arg("beta"), py::arg("c_max"), py::arg("tail_tolerance"));
  m.def("oracle_row", &oracle_row, py::arg("n"), py::arg("infected"), py::arg("f0"), py::arg("f1"));

  m.def(
      "sweep",
      [](const ModelSpec& base, std::vector<int> ns, double tol, const std::string& projection) {
        const Projection rule = parse_projection(projection);
        std::vector<SweepRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_sweep(base, std::move(ns), {tol}, rule);
        }
        py::list out;
        for (const SweepRow& r : rows) {
          py::dict d;
          d["n"] = r.n;
          d["J_star_n"] = r.J_star_n;
          d["EVQ"] = r.EVQ;
          d["gap"] = r.gap;
          d["epsilon_optimality"] = r.epsilon_optimality;
          d["error_bound"] = r.error_bound;
          out.append(d);
        }
        return out;
      },
      py::arg("model"), py::arg("ns"), py::arg("tol") = 1e-9, py::arg("projection") = "linear");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
