#include "epinet/stochastic.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "epinet/rng.hpp"
#include "epinet/spectral.hpp"

namespace epinet {

std::string compartment_name(Compartment c) {
  switch (c) {
    case Compartment::S: return "S";
    case Compartment::I: return "I";
    case Compartment::R: return "R";
    case Compartment::P: return "P";
    case Compartment::I1: return "I1";
    case Compartment::I2: return "I2";
  }
  return "?";
}

std::string SimOutcome::events_to_csv() const {
  std::ostringstream out;
  out << "time,node,from,to\n";
  char buf[40];
  for (const SimEvent& e : events) {
    std::snprintf(buf, sizeof(buf), "%.12g", e.time);
    out << buf << "," << e.node << "," << compartment_name(e.from) << ","
        << compartment_name(e.to) << "\n";
  }
  return out.str();
}

SimOutcome ssa_network_sis(const Graph& g, const RateModel& rates,
                           const std::vector<Compartment>& x0, std::uint64_t seed,
                           double t_cap) {
  const int n = g.node_count();
  if (static_cast<int>(x0.size()) != n)
    throw std::invalid_argument("ssa: initial state must have one label per node");
  if (rates.node_count() != n)
    throw std::invalid_argument("ssa: rate model does not match graph");
  if (!(t_cap > 0.0)) throw std::invalid_argument("ssa: t_cap must be > 0");
  for (Compartment c : x0)
    if (c != Compartment::S && c != Compartment::I)
      throw std::invalid_argument("ssa: SIS states are S and I only");

  SplitMix64 rng(seed);
  std::vector<char> infected(n, 0);
  int infected_count = 0;
  for (int i = 0; i < n; ++i)
    if (x0[i] == Compartment::I) {
      infected[i] = 1;
      ++infected_count;
    }

  // pressure_i = sum over infected j of beta(i, j); maintained by column
  // updates (O(n) per event) and rebuilt periodically to shed roundoff.
  Eigen::VectorXd pressure = Eigen::VectorXd::Zero(n);
  auto rebuild_pressure = [&] {
    pressure.setZero();
    for (int j = 0; j < n; ++j)
      if (infected[j]) pressure += rates.beta.col(j);
  };
  rebuild_pressure();

  SimOutcome out;
  out.seed = seed;
  double t = 0.0;
  long events_done = 0;
  while (infected_count > 0) {
    double total = 0.0;
    for (int i = 0; i < n; ++i)
      total += infected[i] ? rates.delta(i) : std::max(pressure(i), 0.0);
    assert(total > 0.0);  // infected nodes always carry recovery rate

    t += -std::log(rng.next_open()) / total;
    if (t > t_cap) {
      out.absorbed = false;
      out.t_end = t_cap;
      out.final_state = x0;
      for (int i = 0; i < n; ++i)
        out.final_state[i] = infected[i] ? Compartment::I : Compartment::S;
      return out;
    }

    double target = rng.next_double() * total;
    double acc = 0.0;
    int pick = n - 1;
    for (int i = 0; i < n; ++i) {
      acc += infected[i] ? rates.delta(i) : std::max(pressure(i), 0.0);
      if (target < acc) {
        pick = i;
        break;
      }
    }

    if (infected[pick]) {
      infected[pick] = 0;
      --infected_count;
      pressure -= rates.beta.col(pick);
      out.events.push_back({t, pick, Compartment::I, Compartment::S});
    } else {
      infected[pick] = 1;
      ++infected_count;
      pressure += rates.beta.col(pick);
      out.events.push_back({t, pick, Compartment::S, Compartment::I});
    }
    if (++events_done % 4096 == 0) rebuild_pressure();
  }

  out.absorbed = true;
  out.absorption_time = t;
  out.t_end = t;
  out.final_state.assign(n, Compartment::S);
  return out;
}

SimOutcome ssa_population(PopulationModel model, int n, double beta, double delta,
                          const PopulationCounts& counts0, std::uint64_t seed,
                          double t_cap) {
  if (n < 1) throw std::invalid_argument("ssa population: n must be >= 1");
  if (counts0.susceptible < 0 || counts0.infected < 0 || counts0.removed < 0 ||
      counts0.susceptible + counts0.infected + counts0.removed != n)
    throw std::invalid_argument("ssa population: counts must be >= 0 and sum to n");
  if (model == PopulationModel::SIS && counts0.removed != 0)
    throw std::invalid_argument("ssa population: SIS has no removed compartment");
  if (!(t_cap > 0.0)) throw std::invalid_argument("ssa population: t_cap must be > 0");

  SplitMix64 rng(seed);
  double ns = counts0.susceptible, ni = counts0.infected, nr = counts0.removed;
  SimOutcome out;
  out.seed = seed;
  double t = 0.0;
  while (ni > 0) {
    double infect_rate = beta * ni * ns;
    double recover_rate = delta * ni;
    double total = infect_rate + recover_rate;
    assert(total > 0.0);
    t += -std::log(rng.next_open()) / total;
    if (t > t_cap) {
      out.absorbed = false;
      out.t_end = t_cap;
      break;
    }
    if (rng.next_double() * total < infect_rate) {
      ns -= 1;
      ni += 1;
      out.events.push_back({t, -1, Compartment::S, Compartment::I});
    } else {
      ni -= 1;
      if (model == PopulationModel::SIR) {
        nr += 1;
        out.events.push_back({t, -1, Compartment::I, Compartment::R});
      } else {
        ns += 1;
        out.events.push_back({t, -1, Compartment::I, Compartment::S});
      }
    }
  }
  if (ni == 0) {
    out.absorbed = true;
    out.absorption_time = t;
    out.t_end = t;
  }
  out.final_state.assign(static_cast<int>(ns), Compartment::S);
  out.final_state.insert(out.final_state.end(), static_cast<int>(ni), Compartment::I);
  out.final_state.insert(out.final_state.end(), static_cast<int>(nr), Compartment::R);
  return out;
}

double default_t_cap(const RateModel& rates) {
  double dmin = rates.delta.minCoeff();
  double n = static_cast<double>(rates.node_count());
  return 10.0 * (std::log(n) + 1.0) / dmin;
}

ExtinctionStats estimate_extinction_time(const Graph& g, const RateModel& rates,
                                         const std::vector<Compartment>& x0,
                                         int runs, std::uint64_t master_seed,
                                         double t_cap) {
  if (runs < 1) throw std::invalid_argument("extinction estimate: runs must be >= 1");
  ExtinctionStats stats;
  stats.runs = runs;
  stats.master_seed = master_seed;
  stats.t_cap = t_cap;
  std::vector<double> samples;
  samples.reserve(runs);
  for (int k = 0; k < runs; ++k) {
    SimOutcome o = ssa_network_sis(g, rates, x0, master_seed + k, t_cap);
    if (o.absorbed)
      samples.push_back(o.absorption_time);
    else
      ++stats.censored;
  }
  const int m = static_cast<int>(samples.size());
  if (m >= 1) {
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= m;
    stats.mean = mean;
    if (m >= 2) {
      double ss = 0.0;
      for (double s : samples) ss += (s - mean) * (s - mean);
      stats.std_error = std::sqrt(ss / (m - 1)) / std::sqrt(static_cast<double>(m));
    }
  }
  return stats;
}

std::string ExtinctionStats::to_json() const {
  std::ostringstream out;
  char buf[40];
  out << "{\n  \"runs\": " << runs << ",\n  \"censored\": " << censored;
  if (mean) {
    std::snprintf(buf, sizeof(buf), "%.12g", *mean);
    out << ",\n  \"mean\": " << buf;
  } else {
    out << ",\n  \"mean\": null";
  }
  if (std_error) {
    std::snprintf(buf, sizeof(buf), "%.12g", *std_error);
    out << ",\n  \"std_error\": " << buf;
  } else {
    out << ",\n  \"std_error\": null";
  }
  std::snprintf(buf, sizeof(buf), "%.12g", t_cap);
  out << ",\n  \"t_cap\": " << buf << ",\n  \"master_seed\": " << master_seed
      << "\n}\n";
  return out.str();
}

std::optional<double> theorem2_bound(const Graph& g, double beta, double delta) {
  double lam = lambda_max(g.adjacency()).lambda_max;
  if (beta * lam >= delta) return std::nullopt;
  double n = static_cast<double>(g.node_count());
  return (std::log(n) + 1.0) / (delta - beta * lam);
}

MarginalEstimate estimate_marginals(const Graph& g, const RateModel& rates,
                                    const std::vector<Compartment>& x0,
                                    const std::vector<double>& sample_times,
                                    int runs, std::uint64_t master_seed) {
  if (runs < 1) throw std::invalid_argument("marginal estimate: runs must be >= 1");
  if (sample_times.empty())
    throw std::invalid_argument("marginal estimate: no sample times");
  if (!std::is_sorted(sample_times.begin(), sample_times.end()))
    throw std::invalid_argument("marginal estimate: sample times must be sorted");
  if (sample_times.front() < 0.0)
    throw std::invalid_argument("marginal estimate: sample times must be >= 0");

  const int n = g.node_count();
  const int nt = static_cast<int>(sample_times.size());
  double t_cap = std::max(sample_times.back(), 1e-9);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(nt, n);

  std::vector<char> state(n);
  for (int k = 0; k < runs; ++k) {
    SimOutcome o = ssa_network_sis(g, rates, x0, master_seed + k, t_cap);
    for (int i = 0; i < n; ++i) state[i] = (x0[i] == Compartment::I);
    std::size_t ev = 0;
    for (int s = 0; s < nt; ++s) {
      while (ev < o.events.size() && o.events[ev].time <= sample_times[s]) {
        state[o.events[ev].node] = (o.events[ev].to == Compartment::I);
        ++ev;
      }
      for (int i = 0; i < n; ++i)
        if (state[i]) counts(s, i) += 1.0;
    }
  }

  MarginalEstimate est;
  est.times = sample_times;
  est.runs = runs;
  est.mean = counts / static_cast<double>(runs);
  est.std_error =
      (est.mean.array() * (1.0 - est.mean.array()) / static_cast<double>(runs))
          .sqrt();
  return est;
}

}  // namespace epinet
