#include "epinet/optctrl.hpp"

#include <cmath>

#include "doctest.h"
#include "epinet/meanfield.hpp"

using namespace epinet;

namespace {

PopulationControlProblem designated_problem() {
  PopulationControlProblem p;
  p.beta = 0.3;
  p.delta1 = 0.1;
  p.delta2 = 0.6;
  p.infection_cost = 10.0;
  p.treatment_cost = 1.0;
  p.horizon = 10.0;
  p.dt = 1e-3;
  return p;
}

PolicySchedule scalar_policy(double value, double horizon) {
  return PolicySchedule::constant(1, value, horizon, Eigen::VectorXd::Zero(1),
                                  Eigen::VectorXd::Ones(1));
}

SirNetworkControlProblem path3_sir_problem() {
  SirNetworkControlProblem p;
  p.graph = make_path(3);
  p.rates = RateModel::homogeneous(p.graph, 0.6, 1.0);  // delta unused by Eq-style flow
  p.pi = Eigen::VectorXd::Constant(3, 0.7);
  p.u_max = Eigen::VectorXd::Ones(3);
  p.ell = Eigen::VectorXd::Constant(3, 0.5);
  p.c = Eigen::VectorXd::Constant(3, 2.0);
  p.h1 = Eigen::VectorXd::Constant(3, 0.05);
  p.h2 = Eigen::VectorXd::Constant(3, 0.05);
  p.horizon = 6.0;
  p.dt = 2e-3;
  return p;
}

Eigen::VectorXd path3_sir_x0() {
  Eigen::VectorXd x0(9);
  x0 << 0.55, 0.6, 0.7, 0.25, 0.2, 0.1, 0.2, 0.2, 0.2;
  return x0;
}

}  // namespace

TEST_CASE("piecewise-constant lookup and schedule validation") {
  PiecewiseConstant sig{{1.0, 2.5}, {0.0, 1.0, 0.5}};
  CHECK(sig.value_at(0.0) == 0.0);
  CHECK(sig.value_at(0.999) == 0.0);
  CHECK(sig.value_at(1.0) == 1.0);
  CHECK(sig.value_at(2.4) == 1.0);
  CHECK(sig.value_at(2.5) == 0.5);
  CHECK(sig.value_at(99.0) == 0.5);

  PolicySchedule s;
  s.horizon = 3.0;
  s.lower = Eigen::VectorXd::Zero(1);
  s.upper = Eigen::VectorXd::Ones(1);
  s.signals = {sig};
  CHECK_NOTHROW(s.validate());

  PolicySchedule bad = s;
  bad.signals[0].switch_times = {1.0, 4.0};  // outside horizon
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = s;
  bad.signals[0].values = {0.0, 2.0, 0.5};  // above upper bound
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = s;
  bad.signals[0].switch_times = {2.5, 1.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  std::string csv = s.to_csv();
  CHECK(csv.find("t,u_0") == 0);
  CHECK(s.to_json().find("switch_times") != std::string::npos);
}

TEST_CASE("policy classification follows the ratio test") {
  ClassifyResult r = classify_population_policy(designated_problem());
  CHECK(r.verdict == PolicyClass::TreatThenStop);
  CHECK(r.spread_ratio == doctest::Approx(0.6));
  CHECK(r.cost_ratio == doctest::Approx(10.0));

  PopulationControlProblem never = designated_problem();
  never.infection_cost = 1.0;
  never.treatment_cost = 1.0;  // ratio 0.6 vs 1 -> still treat; push beta up
  never.beta = 1.0;            // ratio 2 > 1
  CHECK(classify_population_policy(never).verdict == PolicyClass::NeverTreat);

  PopulationControlProblem edge = designated_problem();
  edge.beta = 0.5;
  edge.infection_cost = 1.0;
  edge.treatment_cost = 1.0;  // ratio 1 == 1
  ClassifyResult e = classify_population_policy(edge);
  CHECK(e.verdict == PolicyClass::NeverTreat);
  CHECK(e.degenerate);

  PopulationControlProblem zero = designated_problem();
  zero.beta = 0.0;
  CHECK(classify_population_policy(zero).verdict == PolicyClass::TreatThenStop);
}

TEST_CASE("controlled population: no control reproduces the natural flow") {
  PopulationControlProblem p = designated_problem();
  Trajectory controlled =
      simulate_controlled_population(p, scalar_policy(0.0, p.horizon), 0.3);
  Trajectory natural = integrate(make_population_sis(p.beta, p.delta1),
                                 Eigen::VectorXd::Constant(1, 0.3), p.horizon, p.dt);
  CHECK(std::abs(controlled.final_state()(0) - natural.final_state()(0)) <= 1e-12);
}

TEST_CASE("constant treatment above the critical fraction kills the epidemic") {
  PopulationControlProblem p = designated_problem();
  p.horizon = 200.0;
  p.dt = 1e-2;
  // critical fraction (beta - delta1)/(delta2 - delta1) = 0.4
  Trajectory t = simulate_controlled_population(p, scalar_policy(0.55, 200.0), 0.3);
  CHECK(t.final_state()(0) <= 1e-5);
}

TEST_CASE("full treatment settles at the delta2 endemic level") {
  PopulationControlProblem p;
  p.beta = 2.0;
  p.delta1 = 0.5;
  p.delta2 = 1.0;
  p.infection_cost = 1.0;
  p.treatment_cost = 1.0;
  p.horizon = 50.0;
  p.dt = 1e-3;
  Trajectory t = simulate_controlled_population(p, scalar_policy(1.0, 50.0), 0.3);
  CHECK(std::abs(t.final_state()(0) - 0.5) <= 1e-6);  // 1 - delta2/beta
}

TEST_CASE("objective evaluation: constants integrate exactly") {
  PopulationControlProblem p = designated_problem();
  Trajectory flat;
  flat.times = {0.0, 2.5, 5.0, 7.5, 10.0};
  flat.states = Eigen::MatrixXd::Constant(5, 1, 0.2);
  flat.labels = {"I"};
  double j = evaluate_objective_population(p, scalar_policy(0.0, 10.0), flat);
  CHECK(j == doctest::Approx(10.0 * 0.2 * 10.0).epsilon(1e-14));

  Trajectory zero = flat;
  zero.states.setZero();
  CHECK(evaluate_objective_population(p, scalar_policy(0.0, 10.0), zero) == 0.0);

  // breakpoint that is not a grid point is rejected
  PolicySchedule off = scalar_policy(0.0, 10.0);
  off.signals[0].switch_times = {1.23};
  off.signals[0].values = {0.0, 1.0};
  CHECK_THROWS_AS(evaluate_objective_population(p, off, flat), std::invalid_argument);
}

TEST_CASE("objective converges under grid refinement") {
  PopulationControlProblem p = designated_problem();
  PolicySchedule policy = scalar_policy(0.0, p.horizon);
  policy.signals[0].switch_times = {4.0};
  policy.signals[0].values = {1.0, 0.0};
  Trajectory coarse = simulate_controlled_population(p, policy, 0.3);
  double j_coarse = evaluate_objective_population(p, policy, coarse);
  PopulationControlProblem fine = p;
  fine.dt = 1e-4;
  Trajectory t_fine = simulate_controlled_population(fine, policy, 0.3);
  double j_fine = evaluate_objective_population(fine, policy, t_fine);
  CHECK(std::abs(j_coarse - j_fine) <= 1e-6 * std::abs(j_fine));
}

TEST_CASE("fbs on a never-treat instance returns the zero policy") {
  PopulationControlProblem p = designated_problem();
  p.infection_cost = 0.5;
  p.treatment_cost = 1.0;  // cost ratio 0.5 < spread ratio 0.6
  REQUIRE(classify_population_policy(p).verdict == PolicyClass::NeverTreat);
  PopulationFbsResult r = fbs_population_sis(p, 0.3);
  CHECK(r.switch_count == 0);
  CHECK(r.schedule.signals[0].values == std::vector<double>{0.0});
  double uncontrolled = evaluate_objective_population(
      p, scalar_policy(0.0, p.horizon),
      simulate_controlled_population(p, scalar_policy(0.0, p.horizon), 0.3));
  CHECK(r.objective == doctest::Approx(uncontrolled).epsilon(1e-12));
}

TEST_CASE("fbs on the designated instance: one switch, oracle-checked time") {
  PopulationControlProblem p = designated_problem();
  PopulationFbsResult r = fbs_population_sis(p, 0.3);
  REQUIRE(r.switch_count == 1);
  CHECK(r.schedule.signals[0].values[0] == 1.0);
  CHECK(r.schedule.signals[0].values[1] == 0.0);

  // costate terminal condition and pointwise switching consistency
  CHECK(std::abs(r.costate.psi(r.costate.psi.rows() - 1, 0)) <= 1e-10);
  for (int k = 0; k < r.costate.psi.rows(); ++k) {
    double f = r.costate.switching(k, 0);
    double uval = r.schedule.signals[0].value_at(r.costate.times[k]);
    if (f > 1e-8) CHECK(uval == 0.0);
    if (f < -1e-8) CHECK(uval == 1.0);
  }

  // dense single-switch grid search
  double best_j = 1e300, best_tau = -1.0;
  const int candidates = 2000;
  for (int k = 0; k < candidates; ++k) {
    double tau = p.horizon * (k + 0.5) / candidates;
    PolicySchedule s = scalar_policy(0.0, p.horizon);
    s.signals[0].switch_times = {tau};
    s.signals[0].values = {1.0, 0.0};
    double j = evaluate_objective_population(
        p, s, simulate_controlled_population(p, s, 0.3));
    if (j < best_j) {
      best_j = j;
      best_tau = tau;
    }
  }
  CHECK(std::abs(r.schedule.signals[0].switch_times[0] - best_tau) <= 0.02);

  // dominance over the constant extremes
  for (double u : {0.0, 1.0}) {
    PolicySchedule s = scalar_policy(u, p.horizon);
    double j = evaluate_objective_population(
        p, s, simulate_controlled_population(p, s, 0.3));
    CHECK(r.objective <= j + 1e-9);
  }
  CHECK(r.objective <= best_j + 1e-6);
}

TEST_CASE("fbs switch count tracks the classification over a sweep") {
  for (int trial = 0; trial < 8; ++trial) {
    PopulationControlProblem p;
    p.beta = 0.2 + 0.1 * trial;
    p.delta1 = 0.1;
    p.delta2 = 0.6 + 0.05 * trial;
    p.infection_cost = (trial % 2 == 0) ? 8.0 : 0.3;
    p.treatment_cost = 1.0;
    p.horizon = 8.0;
    p.dt = 2e-3;
    ClassifyResult c = classify_population_policy(p);
    PopulationFbsResult r = fbs_population_sis(p, 0.4);
    if (c.verdict == PolicyClass::NeverTreat) {
      CHECK(r.switch_count == 0);
      CHECK(r.schedule.signals[0].values[0] == 0.0);
    } else {
      CHECK(r.switch_count <= 1);
      CHECK(r.schedule.signals[0].values[0] == 1.0);
    }
  }
}

TEST_CASE("sir network fbs: no removed mass means no leverage, zero control") {
  SirNetworkControlProblem p = path3_sir_problem();
  p.ell.setZero();
  p.h1.setZero();
  p.h2.setZero();
  Eigen::VectorXd x0(9);
  x0 << 1, 1, 1, 0, 0, 0, 0, 0, 0;  // no infection, no patch carriers
  NetworkFbsResult r = fbs_sir_network(p, x0);
  CHECK(r.tau.lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK(std::abs(r.objective) <= 1e-12);
}

TEST_CASE("sir network fbs: one-switch structure validated by re-integration") {
  SirNetworkControlProblem p = path3_sir_problem();
  NetworkFbsResult r = fbs_sir_network(p, path3_sir_x0());
  CHECK(r.snapped);
  CHECK(r.snap_rel_error <= 1e-4);
  for (const auto& sig : r.schedule.signals)
    CHECK(sig.switch_times.size() <= 1);
  // terminal costates vanish
  CHECK(r.costate.psi.row(r.costate.psi.rows() - 1).lpNorm<Eigen::Infinity>() <=
        1e-10);

  // dominates both constant policies
  for (double frac : {0.0, 1.0}) {
    PolicySchedule s = PolicySchedule::constant(3, frac, p.horizon,
                                                Eigen::VectorXd::Zero(3), p.u_max);
    double j = evaluate_objective_sir(p, s, simulate_sir_network(p, path3_sir_x0(), s));
    CHECK(r.objective <= j + 1e-9 * std::max(1.0, std::abs(j)));
  }
}

TEST_CASE("sis network fbs: cost structure pins the trivial extremes") {
  SisNetworkControlProblem p;
  p.graph = Graph(2);
  p.graph.add_undirected_edge(0, 1);
  p.beta = 0.8 * p.graph.adjacency();
  p.c = Eigen::Vector2d(1.0, 1.0);
  p.d = Eigen::Vector2d(0.2, 0.2);
  p.delta_lo = 0.3;
  p.delta_hi = 1.5;
  p.horizon = 6.0;
  p.dt = 2e-3;
  Eigen::VectorXd p0 = Eigen::Vector2d(0.4, 0.2);

  SisNetworkControlProblem free_treatment = p;
  free_treatment.d.setZero();
  NetworkFbsResult r1 = fbs_sis_network(free_treatment, p0);
  for (const auto& sig : r1.schedule.signals) {
    CHECK(sig.switch_times.empty());
    CHECK(sig.values[0] == free_treatment.delta_hi);
  }

  SisNetworkControlProblem no_infection_cost = p;
  no_infection_cost.c.setZero();
  NetworkFbsResult r2 = fbs_sis_network(no_infection_cost, p0);
  for (const auto& sig : r2.schedule.signals) {
    CHECK(sig.switch_times.empty());
    CHECK(sig.values[0] == no_infection_cost.delta_lo);
  }
}

TEST_CASE("sis network fbs beats the single-switch oracle family") {
  SisNetworkControlProblem p;
  p.graph = Graph(2);
  p.graph.add_undirected_edge(0, 1);
  p.beta = 0.9 * p.graph.adjacency();
  p.c = Eigen::Vector2d(2.0, 1.5);
  p.d = Eigen::Vector2d(0.4, 0.3);
  p.delta_lo = 0.3;
  p.delta_hi = 1.2;
  p.horizon = 6.0;
  p.dt = 2e-3;
  Eigen::VectorXd p0 = Eigen::Vector2d(0.5, 0.3);

  NetworkFbsResult fbs = fbs_sis_network(p, p0);
  CHECK(fbs.objective <= fbs.objective_raw + 1e-2);

  double best = 1e300;
  const int taus = 21;
  for (int a = 0; a <= taus; ++a)
    for (bool a_down : {true, false})
      for (int b = 0; b <= taus; ++b)
        for (bool b_down : {true, false}) {
          PolicySchedule s;
          s.horizon = p.horizon;
          s.lower = Eigen::VectorXd::Constant(2, p.delta_lo);
          s.upper = Eigen::VectorXd::Constant(2, p.delta_hi);
          auto make_sig = [&](int idx, bool down) {
            PiecewiseConstant sig;
            double tau = p.horizon * idx / (taus * 1.0);
            double first = down ? p.delta_hi : p.delta_lo;
            double second = down ? p.delta_lo : p.delta_hi;
            if (tau <= 0.0 || tau >= p.horizon) {
              sig.values = {tau <= 0.0 ? second : first};
            } else {
              sig.switch_times = {tau};
              sig.values = {first, second};
            }
            return sig;
          };
          s.signals = {make_sig(a, a_down), make_sig(b, b_down)};
          double j = evaluate_objective_sis(
              p, s, simulate_sis_network_controlled(p, p0, s));
          best = std::min(best, j);
        }
  CHECK(fbs.objective <= best + 1e-2);

  // constant extremes are dominated too
  for (double v : {p.delta_lo, p.delta_hi}) {
    PolicySchedule s = PolicySchedule::constant(2, v, p.horizon,
                                                Eigen::VectorXd::Constant(2, p.delta_lo),
                                                Eigen::VectorXd::Constant(2, p.delta_hi));
    double j =
        evaluate_objective_sis(p, s, simulate_sis_network_controlled(p, p0, s));
    CHECK(fbs.objective <= j + 1e-9 * std::max(1.0, std::abs(j)));
  }
}
