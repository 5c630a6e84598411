#include "netspread/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "format.hpp"
#include "netspread/meanfield.hpp"

namespace netspread {

PolicySource PolicySource::finite(Policy p) { return {Kind::Finite, std::move(p), 1}; }
PolicySource PolicySource::meanfield(Policy p) { return {Kind::MeanField, std::move(p), 1}; }
PolicySource PolicySource::fixed(int u) { return {Kind::FixedAction, Policy{}, u}; }

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream per (seed, stream index).
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x5851f42d4c957f2dULL)));
}

template <typename Range>
int sample_index(const Range& weights, double r) {
  double cum = 0.0;
  int last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    last_positive = static_cast<int>(k);
    cum += weights[k];
    if (r < cum) return static_cast<int>(k);
  }
  return last_positive;
}

class Rollout {
 public:
  Rollout(const ModelSpec& spec, const TransitionKernel& kern, const GridTables& tables, const PolicySource& source,
          SimMode mode)
      : spec_(spec), kern_(kern), tables_(tables), source_(source), mode_(mode) {}

  Trajectory run(std::mt19937_64& rng, int horizon, bool record) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int n = spec_.n();
    Trajectory traj;

    std::vector<unsigned char> agents;
    int k = 0;
    if (mode_ == SimMode::AgentLevel) {
      agents.resize(static_cast<std::size_t>(n));
      for (auto& a : agents) {
        a = unif(rng) < spec_.rho1() ? 1 : 0;
        k += a;
      }
    } else {
      k = sample_index(binomial_pmf(n, spec_.rho1()).weights, unif(rng));
    }
    int z = sample_index(spec_.z1_dist(), unif(rng));
    double p = spec_.rho1();

    double discount = 1.0;
    for (int t = 1; t <= horizon; ++t) {
      int u = source_.action;
      if (source_.kind == PolicySource::Kind::Finite) {
        u = source_.policy(k, z);
      } else if (source_.kind == PolicySource::Kind::MeanField) {
        u = source_.policy(nearest_grid_index(p, source_.policy.grid_size), z);
        p = macro_step(spec_, u, p, z);
      }
      const std::size_t idx = tables_.index(u, z, k);
      const double cost = tables_.cost[idx];
      traj.discounted_cost += discount * cost;
      discount *= spec_.beta();
      if (record) traj.steps.push_back({t, k, static_cast<double>(k) / n, z, u, cost});

      if (mode_ == SimMode::AgentLevel) {
        const double infect = tables_.f0[idx];
        const double stay = 1.0 - tables_.f1[idx];
        int next = 0;
        for (auto& a : agents) {
          a = unif(rng) < (a ? stay : infect) ? 1 : 0;
          next += a;
        }
        k = next;
      } else {
        k = sample_index(kern_.row(u, z, k), unif(rng));
      }
      const double rz = unif(rng);
      double cum = 0.0;
      int z_next = z;
      for (int zn = 0; zn < spec_.z_states(); ++zn) {
        const double pz = spec_.z_transition(u, z, zn);
        if (pz <= 0.0) continue;
        z_next = zn;
        cum += pz;
        if (rz < cum) break;
      }
      z = z_next;
    }
    return traj;
  }

 private:
  const ModelSpec& spec_;
  const TransitionKernel& kern_;
  const GridTables& tables_;
  const PolicySource& source_;
  SimMode mode_;
};

void check_source(const ModelSpec& spec, const PolicySource& source) {
  switch (source.kind) {
    case PolicySource::Kind::Finite:
      if (source.policy.grid_size != spec.n() + 1 || source.policy.z_states != spec.z_states()) {
        throw std::invalid_argument("finite policy does not match the model grid");
      }
      break;
    case PolicySource::Kind::MeanField:
      if (source.policy.grid_size < 2 || source.policy.z_states != spec.z_states()) {
        throw std::invalid_argument("mean-field policy does not match the model");
      }
      break;
    case PolicySource::Kind::FixedAction:
      spec.action(source.action);
      break;
  }
}

}  // namespace

SimResult simulate(const ModelSpec& spec, const TransitionKernel& kern, const PolicySource& source,
                   const SimConfig& cfg) {
  if (cfg.rollouts < 1 || cfg.horizon < 1) throw std::invalid_argument("simulate: rollouts and horizon must be positive");
  check_source(spec, source);

  const GridTables tables = tabulate(spec);
  const Rollout rollout(spec, kern, tables, source, cfg.mode);
  std::vector<double> costs(static_cast<std::size_t>(cfg.rollouts));
  SimResult result;
  result.trajectories.resize(static_cast<std::size_t>(std::clamp(cfg.keep_trajectories, 0, cfg.rollouts)));

  auto work = [&](int first, int stride) {
    for (int r = first; r < cfg.rollouts; r += stride) {
      auto rng = make_stream(cfg.seed, static_cast<std::uint64_t>(r));
      const bool record = r < static_cast<int>(result.trajectories.size());
      Trajectory traj = rollout.run(rng, cfg.horizon, record);
      costs[static_cast<std::size_t>(r)] = traj.discounted_cost;
      if (record) result.trajectories[static_cast<std::size_t>(r)] = std::move(traj);
    }
  };
  const int workers = std::clamp(static_cast<int>(std::thread::hardware_concurrency()), 1, std::max(1, cfg.rollouts / 64));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }

  double sum = 0.0;
  for (double c : costs) sum += c;
  const double mean = sum / cfg.rollouts;
  double ss = 0.0;
  for (double c : costs) ss += (c - mean) * (c - mean);

  CostEstimate& est = result.estimate;
  est.mean = mean;
  est.standard_error = cfg.rollouts > 1 ? std::sqrt(ss / (cfg.rollouts - 1)) / std::sqrt(cfg.rollouts) : 0.0;
  est.rollouts = cfg.rollouts;
  est.horizon = cfg.horizon;
  est.tail_bound = std::pow(spec.beta(), cfg.horizon) * tables.max_cost() / (1.0 - spec.beta());
  est.seed = cfg.seed;
  return result;
}

int certified_horizon(double beta, double c_max, double tail_tolerance) {
  if (!(tail_tolerance > 0.0)) throw std::invalid_argument("certified_horizon: tolerance must be positive");
  int h = 0;
  double tail = c_max / (1.0 - beta);
  while (tail > tail_tolerance) {
    tail *= beta;
    ++h;
  }
  return std::max(h, 1);
}

std::vector<double> one_step_histogram(const ModelSpec& spec, const TransitionKernel& kern, SimMode mode, int u,
                                       int z, int m_index, int samples, std::uint64_t seed) {
  const int n = spec.n();
  const Dynamics d = eval_dynamics(spec, u, static_cast<double>(m_index) / n, z);
  const auto row = kern.row(u, z, m_index);
  auto rng = make_stream(seed, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> hist(static_cast<std::size_t>(n) + 1, 0.0);
  for (int s = 0; s < samples; ++s) {
    int next = 0;
    if (mode == SimMode::AgentLevel) {
      for (int a = 0; a < n; ++a) next += unif(rng) < (a < m_index ? 1.0 - d.f1 : d.f0) ? 1 : 0;
    } else {
      next = sample_index(row, unif(rng));
    }
    hist[static_cast<std::size_t>(next)] += 1.0;
  }
  for (double& h : hist) h /= samples;
  return hist;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return 0.5 * s;
}

std::vector<double> oracle_row(int n, int infected, double f0, double f1) {
  if (n < 1 || n > 12) throw std::invalid_argument("oracle_row: enumeration supports 1 <= n <= 12");
  if (infected < 0 || infected > n) throw std::out_of_range("oracle_row: infected count outside [0,n]");
  std::vector<double> dist(static_cast<std::size_t>(n) + 1, 0.0);
  // Agents [0, infected) start infected. Bit a of `outcome` is agent a's next state.
  for (unsigned outcome = 0; outcome < (1u << n); ++outcome) {
    double prob = 1.0;
    int count = 0;
    for (int a = 0; a < n; ++a) {
      const bool next_infected = (outcome >> a) & 1u;
      const double p_infected = a < infected ? 1.0 - f1 : f0;
      prob *= next_infected ? p_infected : 1.0 - p_infected;
      count += next_infected ? 1 : 0;
    }
    dist[static_cast<std::size_t>(count)] += prob;
  }
  return dist;
}

std::vector<double> oracle_kernel(const ModelSpec& spec, int u, int z, int m_index) {
  const Dynamics d = eval_dynamics(spec, u, static_cast<double>(m_index) / spec.n(), z);
  return oracle_row(spec.n(), m_index, d.f0, d.f1);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  using detail::format_number;
  out << "t,m,z,u,stage_cost\n";
  for (const TrajectoryStep& s : traj.steps) {
    out << s.t << ',' << format_number(s.m) << ',' << s.z << ',' << s.u << ',' << format_number(s.stage_cost) << '\n';
  }
}

nlohmann::json estimate_to_json(const CostEstimate& est) {
  return {{"mean", est.mean},           {"stderr", est.standard_error}, {"rollouts", est.rollouts},
          {"horizon", est.horizon},     {"tail_bound", est.tail_bound}, {"seed", est.seed}};
}

}  // namespace netspread
