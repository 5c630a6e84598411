#include "netspread/kernel.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "format.hpp"

namespace netspread {

BinomialPmf binomial_pmf(int trials, double p) {
  if (trials < 0) throw std::invalid_argument("binomial_pmf: negative trial count");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial_pmf: probability outside [0,1]");

  BinomialPmf pmf{trials, p, std::vector<double>(static_cast<std::size_t>(trials) + 1, 0.0)};
  auto& w = pmf.weights;
  if (p == 0.0) {
    w.front() = 1.0;
    return pmf;
  }
  if (p == 1.0) {
    w.back() = 1.0;
    return pmf;
  }

  const int n = trials;
  const int mode = std::min(n, static_cast<int>(std::floor((n + 1) * p)));
  const double log_mode = std::lgamma(n + 1.0) - std::lgamma(mode + 1.0) - std::lgamma(n - mode + 1.0) +
                          mode * std::log(p) + (n - mode) * std::log1p(-p);
  const double odds = p / (1.0 - p);
  w[static_cast<std::size_t>(mode)] = std::exp(log_mode);
  for (int k = mode; k < n; ++k) {
    w[static_cast<std::size_t>(k + 1)] = w[static_cast<std::size_t>(k)] * (n - k) / (k + 1.0) * odds;
  }
  for (int k = mode; k > 0; --k) {
    w[static_cast<std::size_t>(k - 1)] = w[static_cast<std::size_t>(k)] * k / (n - k + 1.0) / odds;
  }

  double sum = 0.0;
  for (double x : w) sum += x;
  for (double& x : w) x /= sum;
  return pmf;
}

std::vector<double> convolve(const BinomialPmf& a, const BinomialPmf& b) {
  const auto& x = a.weights;
  const auto& y = b.weights;
  std::vector<double> out(x.size() + y.size() - 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) continue;
    for (std::size_t j = 0; j < y.size(); ++j) out[i + j] += x[i] * y[j];
  }
  return out;
}

std::vector<double> convolution_row(int n, int infected, double f0, double f1) {
  if (infected < 0 || infected > n) throw std::out_of_range("convolution_row: infected count outside [0,n]");
  return convolve(binomial_pmf(n - infected, f0), binomial_pmf(infected, 1.0 - f1));
}

std::vector<double> all_susceptible_row(int n, double f0) { return binomial_pmf(n, f0).weights; }

std::vector<double> all_infected_row(int n, double f1) { return binomial_pmf(n, 1.0 - f1).weights; }

TransitionKernel::TransitionKernel(int n, int num_actions, int z_states, std::vector<SquareMatrix> z_kernels)
    : n_(n),
      num_actions_(num_actions),
      z_states_(z_states),
      data_(static_cast<std::size_t>(num_actions) * z_states * (n + 1) * (n + 1), 0.0),
      z_kernels_(std::move(z_kernels)) {
  if (static_cast<int>(z_kernels_.size()) != num_actions) {
    throw std::invalid_argument("TransitionKernel: one z kernel per action required");
  }
}

std::size_t TransitionKernel::offset(int u, int z, int i) const {
  if (u < 1 || u > num_actions_ || z < 0 || z >= z_states_ || i < 0 || i > n_) {
    throw std::out_of_range("TransitionKernel: index out of range");
  }
  const auto side = static_cast<std::size_t>(n_ + 1);
  return ((static_cast<std::size_t>(u - 1) * z_states_ + z) * side + i) * side;
}

std::span<const double> TransitionKernel::row(int u, int z, int i) const {
  return {data_.data() + offset(u, z, i), static_cast<std::size_t>(n_ + 1)};
}

std::span<double> TransitionKernel::row(int u, int z, int i) {
  return {data_.data() + offset(u, z, i), static_cast<std::size_t>(n_ + 1)};
}

double TransitionKernel::z_transition(int u, int z, int z_next) const {
  return z_kernels_.at(static_cast<std::size_t>(u - 1))(static_cast<std::size_t>(z), static_cast<std::size_t>(z_next));
}

TransitionKernel build_kernel(const GridTables& t, std::vector<SquareMatrix> z_kernels) {
  TransitionKernel kern(t.n, t.num_actions, t.z_states, std::move(z_kernels));
  const int n = t.n;
  for (int u = 1; u <= t.num_actions; ++u) {
    for (int z = 0; z < t.z_states; ++z) {
      for (int i = 0; i <= n; ++i) {
        const std::size_t k = t.index(u, z, i);
        std::vector<double> r;
        if (i == 0) {
          r = all_susceptible_row(n, t.f0[k]);
        } else if (i == n) {
          r = all_infected_row(n, t.f1[k]);
        } else {
          r = convolution_row(n, i, t.f0[k], t.f1[k]);
        }
        auto dst = kern.row(u, z, i);
        std::copy(r.begin(), r.end(), dst.begin());
      }
    }
  }
  return kern;
}

TransitionKernel build_kernel(const ModelSpec& spec) {
  std::vector<SquareMatrix> zk;
  for (const ActionModel& a : spec.actions()) zk.push_back(a.z_kernel);
  return build_kernel(tabulate(spec), std::move(zk));
}

std::vector<double> joint_step_distribution(const TransitionKernel& kern, int m_index, int z, int u) {
  const auto row = kern.row(u, z, m_index);
  const auto zs = static_cast<std::size_t>(kern.z_states());
  std::vector<double> table(row.size() * zs, 0.0);
  for (std::size_t j = 0; j < row.size(); ++j) {
    for (std::size_t zn = 0; zn < zs; ++zn) {
      table[j * zs + zn] = kern.z_transition(u, z, static_cast<int>(zn)) * row[j];
    }
  }
  return table;
}

void write_kernel_csv(std::ostream& out, const TransitionKernel& kern) {
  out << "# infected agents remain infected with probability 1 - f1; susceptible agents are infected with "
         "probability f0\n";
  out << "u,z,m_index,mplus_index,probability\n";
  for (int u = 1; u <= kern.num_actions(); ++u) {
    for (int z = 0; z < kern.z_states(); ++z) {
      for (int i = 0; i <= kern.n(); ++i) {
        const auto r = kern.row(u, z, i);
        for (int j = 0; j <= kern.n(); ++j) {
          const double p = r[static_cast<std::size_t>(j)];
          if (p < 1e-15) continue;
          out << u << ',' << z << ',' << i << ',' << j << ',' << detail::format_number(p) << '\n';
        }
      }
    }
  }
}

}  // namespace netspread
