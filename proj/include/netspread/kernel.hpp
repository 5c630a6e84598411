#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "netspread/model.hpp"

namespace netspread {

struct BinomialPmf {
  int trials = 0;
  double success_prob = 0.0;
  std::vector<double> weights;  // trials + 1 entries
};

/// Binomial PMF built outward from the mode with the ratio recurrence
/// w[k+1] = w[k] (n-k)/(k+1) p/(1-p), then normalized.
BinomialPmf binomial_pmf(int trials, double p);

/// Direct (non-transform) convolution of two PMFs.
std::vector<double> convolve(const BinomialPmf& a, const BinomialPmf& b);

/// Next-count distribution when `infected` of `n` agents are infected:
/// the susceptible block gets infected w.p. f0, the infected block stays
/// infected w.p. 1 - f1. Valid for every infected count in [0, n].
std::vector<double> convolution_row(int n, int infected, double f0, double f1);

/// Boundary rows: all susceptible (f0 only) and all infected (1 - f1 only).
std::vector<double> all_susceptible_row(int n, double f0);
std::vector<double> all_infected_row(int n, double f1);

/// Exact transition kernel of the infected fraction, one dense
/// (n+1)x(n+1) row-stochastic matrix per (u, z).
class TransitionKernel {
 public:
  TransitionKernel(int n, int num_actions, int z_states, std::vector<SquareMatrix> z_kernels);

  int n() const { return n_; }
  int num_actions() const { return num_actions_; }
  int z_states() const { return z_states_; }

  std::span<const double> row(int u, int z, int i) const;
  std::span<double> row(int u, int z, int i);
  double operator()(int u, int z, int i, int j) const { return row(u, z, i)[static_cast<std::size_t>(j)]; }
  double z_transition(int u, int z, int z_next) const;

 private:
  std::size_t offset(int u, int z, int i) const;

  int n_;
  int num_actions_;
  int z_states_;
  std::vector<double> data_;
  std::vector<SquareMatrix> z_kernels_;
};

TransitionKernel build_kernel(const ModelSpec& spec);
/// Kernel from precomputed grid tables; z kernels indexed by action - 1.
TransitionKernel build_kernel(const GridTables& tables, std::vector<SquareMatrix> z_kernels);

/// Joint law of (m+, z+) as an (n+1) x |Z| table, entry [j * |Z| + z+].
std::vector<double> joint_step_distribution(const TransitionKernel& kern, int m_index, int z, int u);

/// CSV dump (u, z, m_index, mplus_index, probability); entries below 1e-15 skipped.
void write_kernel_csv(std::ostream& out, const TransitionKernel& kern);

}  // namespace netspread
