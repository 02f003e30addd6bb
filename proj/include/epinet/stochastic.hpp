#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epinet/graph.hpp"
#include "epinet/rates.hpp"

namespace epinet {

enum class Compartment : std::uint8_t { S, I, R, P, I1, I2 };

std::string compartment_name(Compartment c);

struct SimEvent {
  double time = 0.0;
  int node = -1;  // -1 for population-level transitions
  Compartment from = Compartment::S;
  Compartment to = Compartment::S;
};

struct SimOutcome {
  std::vector<SimEvent> events;
  bool absorbed = false;       // reached the infection-free state before t_cap
  double absorption_time = 0;  // valid iff absorbed
  double t_end = 0.0;          // absorption_time or t_cap
  std::vector<Compartment> final_state;
  std::uint64_t seed = 0;

  /// CSV "time,node,from,to".
  std::string events_to_csv() const;
};

/// Statistically exact event-driven simulation of the networked SIS Markov
/// chain: susceptible i becomes infected at rate sum_{j infected} beta(i, j),
/// infected i recovers at rate delta_i. Runs until the all-healthy absorbing
/// state or t_cap (censored).
SimOutcome ssa_network_sis(const Graph& g, const RateModel& rates,
                           const std::vector<Compartment>& x0, std::uint64_t seed,
                           double t_cap);

enum class PopulationModel { SIS, SIR };

struct PopulationCounts {
  int susceptible = 0;
  int infected = 0;
  int removed = 0;
};

/// Exact simulation of the count-level chain with mass-action infection rate
/// beta * N_I * N_S and recovery rate delta * N_I (SIR recoveries move to R).
SimOutcome ssa_population(PopulationModel model, int n, double beta, double delta,
                          const PopulationCounts& counts0, std::uint64_t seed,
                          double t_cap);

struct ExtinctionStats {
  int runs = 0;
  int censored = 0;
  std::optional<double> mean;       // over uncensored runs
  std::optional<double> std_error;  // needs >= 2 uncensored runs
  std::uint64_t master_seed = 0;
  double t_cap = 0.0;

  std::string to_json() const;
};

/// Default censoring cap 10 (ln N + 1) / min_i delta_i.
double default_t_cap(const RateModel& rates);

/// Monte Carlo extinction-time estimate; run k uses seed master_seed + k, so
/// results are reproducible and independent of execution order. Censored runs
/// are counted but never averaged in.
ExtinctionStats estimate_extinction_time(const Graph& g, const RateModel& rates,
                                         const std::vector<Compartment>& x0,
                                         int runs, std::uint64_t master_seed,
                                         double t_cap);

/// (ln N + 1) / (delta - beta lambda_max(A)) when beta lambda_max(A) < delta
/// strictly; nullopt (inapplicable) otherwise.
std::optional<double> theorem2_bound(const Graph& g, double beta, double delta);

struct MarginalEstimate {
  std::vector<double> times;
  Eigen::MatrixXd mean;       // times x nodes, empirical P(X_i = I)
  Eigen::MatrixXd std_error;  // same shape
  int runs = 0;
};

MarginalEstimate estimate_marginals(const Graph& g, const RateModel& rates,
                                    const std::vector<Compartment>& x0,
                                    const std::vector<double>& sample_times,
                                    int runs, std::uint64_t master_seed);

}  // namespace epinet
