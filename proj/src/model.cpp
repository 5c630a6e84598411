#include "netspread/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace netspread {

namespace {

std::string triple(int u, double m, int z) {
  std::ostringstream os;
  os << "(u=" << u << ", m=" << m << ", z=" << z << ")";
  return os.str();
}

double clamp_probability(double v, const char* name, int u, double m, int z) {
  if (v < -kClampTolerance || v > 1.0 + kClampTolerance) {
    std::ostringstream os;
    os << name << " = " << v << " outside [0,1] at " << triple(u, m, z);
    throw ModelError(os.str());
  }
  return std::clamp(v, 0.0, 1.0);
}

void check_distribution(const std::vector<double>& p, const std::string& what) {
  double sum = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw ModelError(what + " has a negative or NaN entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ModelError(what + " does not sum to 1");
}

}  // namespace

ModelSpec::ModelSpec(int n, double beta, double rho1, std::vector<double> z1_dist,
                     std::vector<ActionModel> actions, bool z1_defaulted)
    : n_(n),
      beta_(beta),
      rho1_(rho1),
      z1_dist_(std::move(z1_dist)),
      actions_(std::move(actions)),
      z1_defaulted_(z1_defaulted) {
  if (n_ < 1) throw ModelError("n must be a positive integer");
  if (!(beta_ > 0.0 && beta_ < 1.0)) throw ModelError("beta must lie in the open interval (0,1)");
  if (!(rho1_ >= 0.0 && rho1_ <= 1.0)) throw ModelError("rho1 must lie in [0,1]");
  if (z1_dist_.empty()) throw ModelError("z1_dist must be nonempty");
  if (actions_.empty()) throw ModelError("at least one action is required");
  check_distribution(z1_dist_, "z1_dist");

  const auto zs = static_cast<std::size_t>(z_states());
  for (int u = 1; u <= num_actions(); ++u) {
    const SquareMatrix& k = action(u).z_kernel;
    if (k.size != zs || k.data.size() != zs * zs) {
      throw ModelError("z_kernel of action " + std::to_string(u) + " is not " +
                       std::to_string(zs) + "x" + std::to_string(zs));
    }
    for (std::size_t r = 0; r < zs; ++r) {
      std::vector<double> row(k.data.begin() + static_cast<std::ptrdiff_t>(r * zs),
                              k.data.begin() + static_cast<std::ptrdiff_t>((r + 1) * zs));
      check_distribution(row, "z_kernel row " + std::to_string(r) + " of action " + std::to_string(u));
    }
  }

  // Eager grid validation; eval_dynamics throws with the offending triple.
  for (int u = 1; u <= num_actions(); ++u) {
    for (int z = 0; z < z_states(); ++z) {
      for (int i = 0; i <= n_; ++i) {
        eval_dynamics(*this, u, static_cast<double>(i) / n_, z);
      }
    }
  }
}

const ActionModel& ModelSpec::action(int u) const {
  if (u < 1 || u > num_actions()) throw std::out_of_range("action index " + std::to_string(u));
  return actions_[static_cast<std::size_t>(u - 1)];
}

double ModelSpec::z_transition(int u, int z, int z_next) const {
  return action(u).z_kernel(static_cast<std::size_t>(z), static_cast<std::size_t>(z_next));
}

ModelSpec ModelSpec::with_n(int n) const {
  return ModelSpec(n, beta_, rho1_, z1_dist_, actions_, z1_defaulted_);
}

Dynamics eval_dynamics(const ModelSpec& spec, int u, double m, int z) {
  if (z < 0 || z >= spec.z_states()) throw std::out_of_range("adversary state " + std::to_string(z));
  const ActionModel& a = spec.action(u);
  const auto zd = static_cast<double>(z);
  Dynamics d;
  try {
    d.f0 = clamp_probability(a.f0.evaluate(m, zd), "f0", u, m, z);
    d.f1 = clamp_probability(a.f1.evaluate(m, zd), "f1", u, m, z);
    d.cost = a.cost.evaluate(m, zd);
  } catch (const EvalError& e) {
    throw ModelError(std::string(e.what()) + " at " + triple(u, m, z));
  }
  if (d.cost < -kClampTolerance) {
    std::ostringstream os;
    os << "cost = " << d.cost << " is negative at " << triple(u, m, z);
    throw ModelError(os.str());
  }
  d.cost = std::max(d.cost, 0.0);
  return d;
}

GridTables::GridTables(int n_, int num_actions_, int z_states_)
    : n(n_), num_actions(num_actions_), z_states(z_states_) {
  const auto size = static_cast<std::size_t>(num_actions) * z_states * (n + 1);
  f0.assign(size, 0.0);
  f1.assign(size, 0.0);
  cost.assign(size, 0.0);
}

double GridTables::max_cost() const {
  return cost.empty() ? 0.0 : *std::max_element(cost.begin(), cost.end());
}

GridTables tabulate(const ModelSpec& spec) {
  GridTables t(spec.n(), spec.num_actions(), spec.z_states());
  for (int u = 1; u <= spec.num_actions(); ++u) {
    for (int z = 0; z < spec.z_states(); ++z) {
      for (int i = 0; i <= spec.n(); ++i) {
        const Dynamics d = eval_dynamics(spec, u, static_cast<double>(i) / spec.n(), z);
        const std::size_t k = t.index(u, z, i);
        t.f0[k] = d.f0;
        t.f1[k] = d.f1;
        t.cost[k] = d.cost;
      }
    }
  }
  return t;
}

namespace {

Expression parse_field(const nlohmann::json& rec, const char* key, std::size_t action) {
  if (!rec.contains(key) || !rec.at(key).is_string()) {
    throw ModelError("actions[" + std::to_string(action) + "]." + key + " must be an expression string");
  }
  try {
    return parse_expression(rec.at(key).get<std::string>());
  } catch (const ParseError& e) {
    throw ModelError("actions[" + std::to_string(action) + "]." + key + ": " + e.what());
  }
}

template <typename T>
T required(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) throw ModelError(std::string("missing field '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ModelError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

ModelSpec load_model(const nlohmann::json& document, int n_override) {
  if (document.is_string()) {
    if (document.get<std::string>() != "example1") {
      throw ModelError("unknown built-in model '" + document.get<std::string>() + "'");
    }
    return example1_model(n_override > 0 ? n_override : 200);
  }
  if (!document.is_object()) throw ModelError("model document must be a JSON object");

  const int n = n_override > 0 ? n_override : required<int>(document, "n");
  const auto beta = required<double>(document, "beta");
  const auto rho1 = required<double>(document, "rho1");
  if (!document.contains("actions") || !document.at("actions").is_array() || document.at("actions").empty()) {
    throw ModelError("field 'actions' must be a nonempty array");
  }

  std::vector<ActionModel> actions;
  std::size_t zs = 0;
  for (std::size_t a = 0; a < document.at("actions").size(); ++a) {
    const auto& rec = document.at("actions")[a];
    if (!rec.is_object()) throw ModelError("actions[" + std::to_string(a) + "] must be an object");
    ActionModel am;
    am.f0 = parse_field(rec, "f0", a);
    am.f1 = parse_field(rec, "f1", a);
    am.cost = parse_field(rec, "cost", a);
    std::vector<std::vector<double>> rows;
    try {
      rows = rec.at("z_kernel").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception&) {
      throw ModelError("actions[" + std::to_string(a) + "].z_kernel must be a square array of reals");
    }
    if (a == 0) zs = rows.size();
    if (rows.size() != zs || zs == 0) throw ModelError("z_kernel sizes differ between actions");
    am.z_kernel = SquareMatrix(zs);
    for (std::size_t r = 0; r < zs; ++r) {
      if (rows[r].size() != zs) throw ModelError("z_kernel of action " + std::to_string(a + 1) + " is not square");
      for (std::size_t c = 0; c < zs; ++c) am.z_kernel(r, c) = rows[r][c];
    }
    actions.push_back(std::move(am));
  }

  std::vector<double> z1;
  bool defaulted = false;
  if (document.contains("z1_dist")) {
    z1 = required<std::vector<double>>(document, "z1_dist");
    if (z1.size() != zs) throw ModelError("z1_dist length does not match the z_kernel size");
  } else {
    z1.assign(zs, 0.0);
    z1[0] = 1.0;
    defaulted = true;
  }
  return ModelSpec(n, beta, rho1, std::move(z1), std::move(actions), defaulted);
}

ModelSpec load_model_file(const std::string& path_or_name, int n_override) {
  if (path_or_name == "example1") return load_model(nlohmann::json("example1"), n_override);
  std::ifstream in(path_or_name);
  if (!in) throw ModelError("cannot open model file '" + path_or_name + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ModelError("model file '" + path_or_name + "' is not valid JSON: " + e.what());
  }
  return load_model(doc, n_override);
}

nlohmann::json model_to_json(const ModelSpec& spec) {
  nlohmann::json doc;
  doc["n"] = spec.n();
  doc["beta"] = spec.beta();
  doc["rho1"] = spec.rho1();
  doc["z1_dist"] = spec.z1_dist();
  doc["actions"] = nlohmann::json::array();
  for (const ActionModel& a : spec.actions()) {
    std::vector<std::vector<double>> rows(a.z_kernel.size, std::vector<double>(a.z_kernel.size));
    for (std::size_t r = 0; r < a.z_kernel.size; ++r) {
      for (std::size_t c = 0; c < a.z_kernel.size; ++c) rows[r][c] = a.z_kernel(r, c);
    }
    doc["actions"].push_back({{"f0", a.f0.to_string()},
                              {"f1", a.f1.to_string()},
                              {"cost", a.cost.to_string()},
                              {"z_kernel", rows}});
  }
  return doc;
}

ModelSpec example1_model(int n) {
  constexpr int kLevels = 5;
  constexpr double kIncrement = 0.3;

  SquareMatrix escalate(kLevels);
  for (int z = 0; z < kLevels - 1; ++z) {
    escalate(z, z) = 1.0 - kIncrement;
    escalate(z, z + 1) = kIncrement;
  }
  escalate(kLevels - 1, kLevels - 1) = 1.0;

  SquareMatrix reset(kLevels);
  for (int z = 0; z < kLevels; ++z) reset(z, 0) = 1.0;

  std::vector<ActionModel> actions;
  // 1: do nothing
  actions.push_back({parse_expression("0.2*m*(z+1)"), parse_expression("0"), parse_expression("3.8*m"), escalate});
  // 2: block the source
  actions.push_back({parse_expression("0.2*m"), parse_expression("0"), parse_expression("3.8*m + 0.2*z + 1"), reset});
  // 3: broadcast authenticated information
  actions.push_back({parse_expression("0.1*m^2"), parse_expression("0.8"), parse_expression("3.8*m + 5"), escalate});

  std::vector<double> z1(kLevels, 0.0);
  z1[0] = 1.0;
  return ModelSpec(n, 0.9, 0.15, std::move(z1), std::move(actions), true);
}

}  // namespace netspread
