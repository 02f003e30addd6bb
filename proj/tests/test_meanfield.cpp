#include "epinet/meanfield.hpp"

#include <cmath>

#include "doctest.h"
#include "epinet/graph.hpp"
#include "epinet/spectral.hpp"

using namespace epinet;

TEST_CASE("closed form limits and branches") {
  // endemic limit 1 - delta/beta
  CHECK(std::abs(closed_form_population_sis(2.0, 1.0, 0.5, 50.0) - 0.5) <= 1e-9);
  // beta == delta branch
  CHECK(closed_form_population_sis(1.0, 1.0, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  // disease-free stays put
  CHECK(closed_form_population_sis(2.0, 1.0, 0.0, 3.0) == 0.0);
  CHECK_THROWS_AS(closed_form_population_sis(2.0, 1.0, -0.1, 1.0), std::invalid_argument);
}

TEST_CASE("population rhs values") {
  CHECK(rhs_population_sis(0.0, 2.0, 1.0) == 0.0);
  // endemic equilibrium of the scalar model
  double p_star = 1.0 - 1.0 / 2.0;
  CHECK(std::abs(rhs_population_sis(p_star, 2.0, 1.0)) <= 1e-15);

  Eigen::Vector3d d = rhs_population_sir({0.6, 0.3, 0.1}, 1.0, 0.5);
  CHECK(d(0) == doctest::Approx(-0.18).epsilon(1e-14));
  CHECK(d(1) == doctest::Approx(0.03).epsilon(1e-13));
  CHECK(std::abs(d.sum()) <= 1e-14);
}

TEST_CASE("integrator: constant under zero rhs, matches the closed form") {
  OdeModel zero;
  zero.rhs = [](double, const Eigen::VectorXd&, Eigen::VectorXd& dx) { dx.setZero(); };
  zero.spec.dim = 2;
  Eigen::VectorXd x0(2);
  x0 << 0.25, 0.75;
  Trajectory t = integrate(zero, x0, 1.0, 0.1);
  for (int k = 0; k < t.samples(); ++k) {
    CHECK(t.states(k, 0) == 0.25);
    CHECK(t.states(k, 1) == 0.75);
  }

  Trajectory sis = integrate(make_population_sis(2.0, 1.0),
                             Eigen::VectorXd::Constant(1, 0.3), 10.0, 1e-3);
  double expect = closed_form_population_sis(2.0, 1.0, 0.3, 10.0);
  CHECK(std::abs(sis.final_state()(0) - expect) <= 1e-6);
}

TEST_CASE("integrator is fourth order against the closed form") {
  auto max_err = [](double dt) {
    Trajectory t = integrate(make_population_sis(2.0, 1.0),
                             Eigen::VectorXd::Constant(1, 0.3), 10.0, dt);
    double worst = 0.0;
    for (int k = 0; k < t.samples(); ++k)
      worst = std::max(worst, std::abs(t.states(k, 0) - closed_form_population_sis(
                                                            2.0, 1.0, 0.3, t.times[k])));
    return worst;
  };
  double coarse = max_err(0.05);
  double fine = max_err(0.025);
  double ratio = coarse / fine;
  CHECK(ratio >= 10.0);
  CHECK(ratio <= 30.0);
}

TEST_CASE("integrator validation and clamping") {
  OdeModel down;
  down.rhs = [](double, const Eigen::VectorXd&, Eigen::VectorXd& dx) {
    dx.setConstant(-1.0);
  };
  down.spec.dim = 1;
  CHECK_THROWS_WITH_AS(integrate(down, Eigen::VectorXd::Zero(1), 1.0, 0.1),
                       doctest::Contains("aborted"), std::runtime_error);
  CHECK_THROWS_AS(integrate(down, Eigen::VectorXd::Zero(1), 1.0, -0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(integrate(down, Eigen::VectorXd::Zero(2), 1.0, 0.1),
                  std::invalid_argument);

  // roundoff-scale overshoot is clamped, not fatal
  OdeModel tiny;
  tiny.rhs = [](double, const Eigen::VectorXd&, Eigen::VectorXd& dx) {
    dx.setConstant(-1e-14);
  };
  tiny.spec.dim = 1;
  Trajectory t = integrate(tiny, Eigen::VectorXd::Zero(1), 0.5, 0.1);
  CHECK(t.states.minCoeff() == 0.0);
}

TEST_CASE("network sis rhs: fixed points and the matrix form") {
  Graph pair(2);
  pair.add_undirected_edge(0, 1);
  RateModel rm = RateModel::homogeneous(pair, 1.0, 1.0);

  CHECK(rhs_network_sis(Eigen::VectorXd::Zero(2), rm).norm() == 0.0);

  Eigen::VectorXd p(2);
  p << 1.0, 0.0;
  Eigen::VectorXd d = rhs_network_sis(p, rm);
  CHECK(d(0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(d(1) == doctest::Approx(1.0).epsilon(1e-14));

  // componentwise evaluation agrees with (B - D) p + h
  Graph g = make_erdos_renyi(7, 0.5, 9);
  RateModel rm2 = RateModel::homogeneous(g, 0.7, 1.3);
  Eigen::VectorXd q(7);
  q << 0.1, 0.9, 0.4, 0.2, 0.8, 0.5, 0.3;
  Eigen::VectorXd h(7);
  for (int i = 0; i < 7; ++i) h(i) = -q(i) * (rm2.beta.row(i) * q)(0);
  Eigen::VectorXd matrix_form = rm2.stability_matrix() * q + h;
  CHECK((rhs_network_sis(q, rm2) - matrix_form).lpNorm<Eigen::Infinity>() <= 1e-14);

  CHECK_THROWS_AS(rhs_network_sis(Eigen::VectorXd::Zero(3), rm), std::invalid_argument);
}

TEST_CASE("endemic equilibrium on the homogeneous complete graph") {
  Graph g = make_complete(5);
  RateModel rm = RateModel::homogeneous(g, 0.5, 1.0);  // tau = 0.5 > 1/4
  EndemicResult eq = endemic_equilibrium(rm);
  REQUIRE(eq.endemic);
  double expect = 1.0 - 1.0 / (0.5 * 4.0);  // scalar fixed point by symmetry
  for (int i = 0; i < 5; ++i) CHECK(eq.p(i) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(eq.residual <= 1e-10);
  CHECK(rhs_network_sis(eq.p, rm).lpNorm<Eigen::Infinity>() <= 1e-8);

  // below threshold: disease-free verdict
  RateModel stable = RateModel::homogeneous(g, 0.2, 1.0);  // tau = 0.2 < 1/4
  CHECK_FALSE(endemic_equilibrium(stable).endemic);
}

TEST_CASE("long integration lands on the endemic equilibrium") {
  Graph g = make_erdos_renyi(6, 0.6, 21);
  RateModel rm = RateModel::homogeneous(g, 0.9, 1.0);
  EndemicResult eq = endemic_equilibrium(rm);
  REQUIRE(eq.endemic);
  Eigen::VectorXd p0(6);
  p0 << 0.9, 0.05, 0.3, 0.6, 0.1, 0.2;
  Trajectory t = integrate(make_network_sis(rm), p0, 200.0, 1e-2);
  CHECK((t.final_state() - eq.p).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("population spis reduces to sis and freezes a hand-computed value") {
  // degenerate feedback: the infected equation is plain SIS
  Eigen::Vector3d state(0.7, 0.3, 0.0);
  Eigen::Vector3d d =
      rhs_population_spis(state, 2.0, 1.0, Feedback::zero(), Feedback::zero());
  CHECK(d(1) == doctest::Approx(2.0 * 0.3 * 0.7 - 0.3).epsilon(1e-14));
  CHECK(d(0) == doctest::Approx(-d(1)).epsilon(1e-14));
  CHECK(d(2) == 0.0);

  // strong protection drive: dP > 0 whenever S > 0
  Eigen::Vector3d dp =
      rhs_population_spis(state, 2.0, 1.0, Feedback::constant(50.0), Feedback::zero());
  CHECK(dp(2) > 0.0);

  // f = p_I, g = 0.1, beta=2, delta=1 at (S, I, P) = (0.5, 0.3, 0.2):
  //   infect = 0.3, f = 0.3, g = 0.1
  //   dS = -0.3 + 0.3 - 0.15 + 0.02 = -0.13, dI = 0, dP = 0.15 - 0.02 = 0.13
  Eigen::Vector3d hand = rhs_population_spis({0.5, 0.3, 0.2}, 2.0, 1.0,
                                             Feedback::linear_infected(1.0),
                                             Feedback::constant(0.1));
  CHECK(hand(0) == doctest::Approx(-0.13).epsilon(1e-13));
  CHECK(hand(1) == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(hand(2) == doctest::Approx(0.13).epsilon(1e-13));
  CHECK(std::abs(hand.sum()) <= 1e-14);
}

TEST_CASE("network spis: reductions and a 3-node hand evaluation") {
  Graph path = make_path(3);
  SpisRates rates{1.0, 0.4, 0.7};

  // no protected mass + zero feedback = plain homogeneous SIS on the I block
  Eigen::VectorXd state(9);
  state << 0.6, 0.5, 0.8, 0.4, 0.5, 0.2, 0.0, 0.0, 0.0;
  Eigen::VectorXd d = rhs_network_spis(state, path, rates, Feedback::zero());
  RateModel rm = RateModel::homogeneous(path, 1.0, 0.7);
  Eigen::VectorXd p = state.segment(3, 3);
  Eigen::VectorXd sis = rhs_network_sis(p, rm);
  for (int i = 0; i < 3; ++i) CHECK(d(3 + i) == doctest::Approx(sis(i)).epsilon(1e-13));

  // beta0 = 0: protected nodes are never infected, dP = S f >= 0
  SpisRates shielded{1.0, 0.0, 0.7};
  Eigen::VectorXd mixed(9);
  mixed << 0.5, 0.4, 0.6, 0.3, 0.3, 0.2, 0.2, 0.3, 0.2;
  Eigen::VectorXd ds = rhs_network_spis(mixed, path, shielded, Feedback::constant(0.2));
  for (int i = 0; i < 3; ++i) CHECK(ds(6 + i) >= 0.0);

  // hand evaluation, constant f = 0.2, S=(.6,.5,.8), I=(.3,.2,.1), P=(.1,.3,.1)
  Eigen::VectorXd hand_state(9);
  hand_state << 0.6, 0.5, 0.8, 0.3, 0.2, 0.1, 0.1, 0.3, 0.1;
  Eigen::VectorXd hd = rhs_network_spis(hand_state, path, rates, Feedback::constant(0.2));
  CHECK(hd(0) == doctest::Approx(-0.03).epsilon(1e-12));
  CHECK(hd(3) == doctest::Approx(-0.082).epsilon(1e-12));
  CHECK(hd(6) == doctest::Approx(0.112).epsilon(1e-12));
  CHECK(hd(1) == doctest::Approx(-0.16).epsilon(1e-12));
  CHECK(hd(4) == doctest::Approx(0.108).epsilon(1e-12));
  CHECK(hd(7) == doctest::Approx(0.052).epsilon(1e-12));
  CHECK(hd(2) == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(hd(5) == doctest::Approx(0.098).epsilon(1e-12));
  CHECK(hd(8) == doctest::Approx(0.152).epsilon(1e-12));
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(hd(i) + hd(3 + i) + hd(6 + i)) <= 1e-14);

  CHECK_THROWS_AS(rhs_network_spis(hand_state, path, SpisRates{1.0, 1.5, 0.7},
                                   Feedback::zero()),
                  std::invalid_argument);
}

TEST_CASE("bivirus: single-virus reduction, decay, conservation") {
  Graph g1 = make_path(3);
  Graph g2 = make_complete(3);
  BivirusRates rates;
  rates.beta1 = Eigen::Vector3d(0.9, 0.8, 0.7);
  rates.delta1 = Eigen::Vector3d(1.0, 1.1, 1.2);
  rates.beta2 = Eigen::Vector3d(0.5, 0.4, 0.3);
  rates.delta2 = Eigen::Vector3d(0.6, 0.7, 0.8);

  // virus 2 absent: the I1 block is the heterogeneous SIS field
  Eigen::Vector3d i1(0.2, 0.4, 0.1);
  Eigen::VectorXd state(9);
  state << (1 - 0.2), (1 - 0.4), (1 - 0.1), 0.2, 0.4, 0.1, 0, 0, 0;
  Eigen::VectorXd d = rhs_bivirus(state, g1, g2, rates);
  RateModel rm = RateModel::node_rates(g1, rates.beta1, rates.delta1);
  Eigen::VectorXd sis = rhs_network_sis(i1, rm);
  for (int i = 0; i < 3; ++i) CHECK(d(3 + i) == doctest::Approx(sis(i)).epsilon(1e-13));

  // no susceptibles: both infections decay at their own rates
  Eigen::VectorXd full(9);
  full << 0, 0, 0, 0.6, 0.5, 0.4, 0.4, 0.5, 0.6;
  Eigen::VectorXd dd = rhs_bivirus(full, g1, g2, rates);
  for (int i = 0; i < 3; ++i) {
    CHECK(dd(3 + i) == doctest::Approx(-rates.delta1(i) * full(3 + i)).epsilon(1e-13));
    CHECK(dd(6 + i) == doctest::Approx(-rates.delta2(i) * full(6 + i)).epsilon(1e-13));
  }

  // 3-node hand evaluation on node 0: S=(.5,.3,.2), I1=(.2,.4,.3), I2=(.3,.3,.5)
  //   path pressure1(0) = I1_1 = .4, complete pressure2(0) = I2_1 + I2_2 = .8
  //   dI1_0 = .9*.5*.4 - 1.0*.2 = -0.02; dI2_0 = .5*.5*.8 - .6*.3 = 0.02
  Eigen::VectorXd hand(9);
  hand << 0.5, 0.3, 0.2, 0.2, 0.4, 0.3, 0.3, 0.3, 0.5;
  Eigen::VectorXd hd = rhs_bivirus(hand, g1, g2, rates);
  CHECK(hd(3) == doctest::Approx(-0.02).epsilon(1e-12));
  CHECK(hd(6) == doctest::Approx(0.02).epsilon(1e-12));
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(hd(i) + hd(3 + i) + hd(6 + i)) <= 1e-14);

  CHECK_THROWS_AS(rhs_bivirus(hand, g1, make_complete(4), rates), std::invalid_argument);
}

TEST_CASE("sir patching: control needs carriers, conservation, bounds") {
  Graph pair(2);
  pair.add_undirected_edge(0, 1);
  RateModel rm = RateModel::homogeneous(pair, 1.0, 1.0);
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(2, 0.8);
  Eigen::VectorXd u_max = Eigen::VectorXd::Constant(2, 1.0);

  // u = 0: pure spread, nothing enters R
  Eigen::VectorXd state(6);
  state << 0.5, 0.4, 0.3, 0.4, 0.2, 0.2;
  Eigen::VectorXd d0 =
      rhs_sir_patching(state, rm, pi, Eigen::VectorXd::Zero(2), u_max);
  CHECK(d0(4) == 0.0);
  CHECK(d0(5) == 0.0);

  // R = 0 everywhere: the patch has no carriers, control does nothing
  Eigen::VectorXd no_r(6);
  no_r << 0.7, 0.6, 0.3, 0.4, 0.0, 0.0;
  Eigen::VectorXd d1 =
      rhs_sir_patching(no_r, rm, pi, Eigen::VectorXd::Constant(2, 1.0), u_max);
  Eigen::VectorXd d2 = rhs_sir_patching(no_r, rm, pi, Eigen::VectorXd::Zero(2), u_max);
  CHECK((d1 - d2).lpNorm<Eigen::Infinity>() == 0.0);

  // 2-node hand evaluation, S=(.5,.4), I=(.3,.4), R=(.2,.2), u = (1, .5):
  //   pressure = (I_1, I_0) = (0.4, 0.3)
  //   node0: infect = .5*.4 = .2, patch_s = .5*.2*1 = .1, patch_i = .8*.3*.2*1 = .048
  //     dS0 = -.3, dI0 = .2 - .048 = .152, dR0 = .148
  //   node1: infect = .4*.3 = .12, patch_s = .4*.2*.5 = .04, patch_i = .8*.4*.2*.5 = .032
  //     dS1 = -.16, dI1 = .12 - .032 = .088, dR1 = .072
  Eigen::VectorXd u(2);
  u << 1.0, 0.5;
  Eigen::VectorXd hd = rhs_sir_patching(state, rm, pi, u, u_max);
  CHECK(hd(0) == doctest::Approx(-0.3).epsilon(1e-13));
  CHECK(hd(2) == doctest::Approx(0.152).epsilon(1e-13));
  CHECK(hd(4) == doctest::Approx(0.148).epsilon(1e-13));
  CHECK(hd(1) == doctest::Approx(-0.16).epsilon(1e-13));
  CHECK(hd(3) == doctest::Approx(0.088).epsilon(1e-13));
  CHECK(hd(5) == doctest::Approx(0.072).epsilon(1e-13));
  for (int i = 0; i < 2; ++i)
    CHECK(std::abs(hd(i) + hd(2 + i) + hd(4 + i)) <= 1e-14);

  CHECK_THROWS_AS(
      rhs_sir_patching(state, rm, pi, Eigen::VectorXd::Constant(2, 2.0), u_max),
      std::invalid_argument);
}

TEST_CASE("rhs agrees with finite differences of the flow") {
  Graph g = make_erdos_renyi(5, 0.6, 2);
  RateModel rm = RateModel::homogeneous(g, 0.8, 1.0);
  Eigen::VectorXd p0(5);
  p0 << 0.3, 0.6, 0.1, 0.5, 0.2;
  OdeModel model = make_network_sis(rm);
  double h = 1e-4;
  Trajectory t = integrate(model, p0, h, h);
  Eigen::VectorXd fd = (t.final_state() - p0) / h;
  Eigen::VectorXd rhs = rhs_network_sis(p0, rm);
  CHECK((fd - rhs).lpNorm<Eigen::Infinity>() <= 10.0 * h);
}

TEST_CASE("compartment sums stay put over a long horizon") {
  Trajectory t = integrate(make_population_sir(1.2, 0.4),
                           Eigen::Vector3d(0.7, 0.3, 0.0), 50.0, 1e-2);
  for (int k = 0; k < t.samples(); ++k)
    CHECK(std::abs(t.states.row(k).sum() - 1.0) <= 1e-9);
}
