#include "epinet/allocation.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "epinet/spectral.hpp"
#include "json.hpp"

namespace epinet {

ThresholdReport check_threshold(const Graph& g, const RateModel& rates) {
  if (rates.node_count() != g.node_count())
    throw std::invalid_argument("check_threshold: rate model does not match graph");
  ThresholdReport r;
  r.lambda_bd = lambda_max(rates.stability_matrix()).lambda_max;
  r.margin = -r.lambda_bd;
  r.stable_disease_free = r.lambda_bd <= 0.0;
  r.strongly_connected = g.is_strongly_connected();
  if (rates.beta_scalar && rates.delta_scalar) {
    double lam_a = lambda_max(g.adjacency()).lambda_max;
    r.tau = *rates.beta_scalar / *rates.delta_scalar;
    if (lam_a > 0.0) {
      r.inv_lambda_a = 1.0 / lam_a;
      r.tau_margin = *r.inv_lambda_a - *r.tau;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Problem basics
// ---------------------------------------------------------------------------

double AllocationProblem::beta_cost_of(int i, double beta) const {
  return beta_cost(i) * (1.0 / beta - 1.0 / beta_hi(i));
}

double AllocationProblem::delta_cost_of(int i, double delta) const {
  double a = delta_exponent;
  double p = phi();
  return delta_cost(i) *
         (std::pow(p - delta, -a) - std::pow(p - delta_lo(i), -a));
}

double AllocationProblem::spend(const Eigen::VectorXd& beta,
                                const Eigen::VectorXd& delta) const {
  double total = 0.0;
  for (int i = 0; i < node_count(); ++i)
    total += beta_cost_of(i, beta(i)) + delta_cost_of(i, delta(i));
  return total;
}

void AllocationProblem::validate() const {
  const int n = graph.node_count();
  if (n < 1) throw std::invalid_argument("allocation: empty graph");
  auto check_len = [n](const Eigen::VectorXd& v, const char* what) {
    if (v.size() != n)
      throw std::invalid_argument(std::string("allocation: ") + what +
                                  " must have length n");
  };
  check_len(beta_lo, "beta_lo");
  check_len(beta_hi, "beta_hi");
  check_len(delta_lo, "delta_lo");
  check_len(delta_hi, "delta_hi");
  check_len(beta_cost, "beta_cost");
  check_len(delta_cost, "delta_cost");
  for (int i = 0; i < n; ++i) {
    if (!(0.0 < beta_lo(i)) || !(beta_lo(i) <= beta_hi(i)))
      throw std::invalid_argument("allocation: need 0 < beta_lo <= beta_hi");
    if (!(0.0 < delta_lo(i)) || !(delta_lo(i) <= delta_hi(i)))
      throw std::invalid_argument("allocation: need 0 < delta_lo <= delta_hi");
    if (beta_cost(i) < 0.0 || delta_cost(i) < 0.0)
      throw std::invalid_argument("allocation: cost coefficients must be >= 0");
  }
  if (!(delta_exponent > 0.0))
    throw std::invalid_argument("allocation: delta cost exponent must be > 0");
  if (!(budget > 0.0)) throw std::invalid_argument("allocation: budget must be > 0");
}

Eigen::MatrixXd stability_matrix_for(const AllocationProblem& problem,
                                     const Eigen::VectorXd& beta,
                                     const Eigen::VectorXd& delta) {
  Eigen::MatrixXd m =
      problem.graph.adjacency().array().colwise() * beta.array();
  m.diagonal() -= delta;
  return m;
}

// ---------------------------------------------------------------------------
// GP construction
// ---------------------------------------------------------------------------

GpBuild build_gp(const AllocationProblem& problem) {
  problem.validate();
  const int n = problem.node_count();
  const Eigen::MatrixXd a = problem.graph.adjacency();
  const double phi = problem.phi();

  GpBuild b;
  b.phi = phi;
  b.beta_var.assign(n, -1);
  b.delta_var.assign(n, -1);
  b.u_var.assign(n, -1);

  // u_i participates when node i has any in- or out-edge.
  std::vector<char> u_active(n, 0);
  for (const Edge& e : problem.graph.edges()) {
    u_active[e.src] = 1;
    u_active[e.dst] = 1;
  }

  GpProgram& gp = b.program;
  gp.var_names.push_back("lambda");
  b.lambda_var = 0;
  int next = 1;
  for (int i = 0; i < n; ++i)
    if (problem.beta_lo(i) < problem.beta_hi(i)) {
      b.beta_var[i] = next++;
      gp.var_names.push_back("beta_" + std::to_string(i));
    }
  for (int i = 0; i < n; ++i)
    if (problem.delta_lo(i) < problem.delta_hi(i)) {
      b.delta_var[i] = next++;
      gp.var_names.push_back("dtilde_" + std::to_string(i));
    }
  // The eigen-constraints are homogeneous of degree zero in u, so one active
  // u is pinned to 1; the reported vector is rescaled afterwards.
  bool pinned_u = false;
  for (int i = 0; i < n; ++i) {
    if (!u_active[i]) continue;
    if (!pinned_u) {
      pinned_u = true;
      continue;
    }
    b.u_var[i] = next++;
    gp.var_names.push_back("u_" + std::to_string(i));
  }
  gp.arity = next;
  gp.objective_index = 0;

  auto monomial = [&](double coeff) {
    return std::pair<double, Eigen::VectorXd>{coeff, Eigen::VectorXd::Zero(gp.arity)};
  };

  // eigen-constraints: (sum_j a_ij beta_i u_j + dtilde_i u_i) / (lambda u_i) <= 1
  for (int i = 0; i < n; ++i) {
    Posynomial posy(gp.arity);
    for (int j = 0; j < n; ++j) {
      if (a(i, j) == 0.0) continue;
      auto [coeff, expo] = monomial(a(i, j));
      if (b.beta_var[i] >= 0)
        expo(b.beta_var[i]) += 1.0;
      else
        coeff *= problem.beta_hi(i);
      if (b.u_var[j] >= 0) expo(b.u_var[j]) += 1.0;
      expo(b.lambda_var) -= 1.0;
      if (b.u_var[i] >= 0) expo(b.u_var[i]) -= 1.0;
      posy.add_term(coeff, expo);
    }
    {
      auto [coeff, expo] = monomial(1.0);
      if (b.delta_var[i] >= 0)
        expo(b.delta_var[i]) += 1.0;
      else
        coeff *= phi - problem.delta_lo(i);
      expo(b.lambda_var) -= 1.0;
      posy.add_term(coeff, expo);
    }
    gp.constraints.push_back({posy, "eigen_" + std::to_string(i)});
  }

  // budget: sum_i beta_cost_i / beta_i + delta_cost_i dtilde_i^-a <= budget_rhs
  double rhs = problem.budget;
  Posynomial budget_posy(gp.arity);
  for (int i = 0; i < n; ++i) {
    if (problem.beta_cost(i) > 0.0) {
      rhs += problem.beta_cost(i) / problem.beta_hi(i);
      auto [coeff, expo] = monomial(problem.beta_cost(i));
      if (b.beta_var[i] >= 0)
        expo(b.beta_var[i]) -= 1.0;
      else
        coeff /= problem.beta_hi(i);
      budget_posy.add_term(coeff, expo);
    }
    if (problem.delta_cost(i) > 0.0) {
      double zero_spend = std::pow(phi - problem.delta_lo(i), -problem.delta_exponent);
      rhs += problem.delta_cost(i) * zero_spend;
      auto [coeff, expo] = monomial(problem.delta_cost(i));
      if (b.delta_var[i] >= 0)
        expo(b.delta_var[i]) -= problem.delta_exponent;
      else
        coeff *= zero_spend;
      budget_posy.add_term(coeff, expo);
    }
  }
  b.budget_rhs = rhs;
  if (!budget_posy.empty()) {
    budget_posy.scale(rhs);
    gp.constraints.push_back({budget_posy, "budget"});
  }

  // box constraints for the free variables
  for (int i = 0; i < n; ++i) {
    if (b.beta_var[i] >= 0) {
      Posynomial lo(gp.arity), hi(gp.arity);
      auto [cl, el] = monomial(problem.beta_lo(i));
      el(b.beta_var[i]) = -1.0;
      lo.add_term(cl, el);
      auto [ch, eh] = monomial(1.0 / problem.beta_hi(i));
      eh(b.beta_var[i]) = 1.0;
      hi.add_term(ch, eh);
      gp.constraints.push_back({lo, "beta_lo_" + std::to_string(i)});
      gp.constraints.push_back({hi, "beta_hi_" + std::to_string(i)});
    }
    if (b.delta_var[i] >= 0) {
      Posynomial lo(gp.arity), hi(gp.arity);
      auto [cl, el] = monomial(phi - problem.delta_hi(i));
      el(b.delta_var[i]) = -1.0;
      lo.add_term(cl, el);
      auto [ch, eh] = monomial(1.0 / (phi - problem.delta_lo(i)));
      eh(b.delta_var[i]) = 1.0;
      hi.add_term(ch, eh);
      gp.constraints.push_back({lo, "dtilde_lo_" + std::to_string(i)});
      gp.constraints.push_back({hi, "dtilde_hi_" + std::to_string(i)});
    }
  }
  return b;
}

// ---------------------------------------------------------------------------
// Top-level solve
// ---------------------------------------------------------------------------

AllocationResult solve_allocation(const AllocationProblem& problem,
                                  const GpOptions& opts) {
  GpBuild b = build_gp(problem);
  const int n = problem.node_count();
  const double phi = b.phi;

  // Strictly interior start: back off the no-spend corner just far enough
  // that the spend stays below half the budget.
  double s = 1e-3;
  Eigen::VectorXd beta0(n), delta0(n);
  for (int tries = 0;; ++tries) {
    for (int i = 0; i < n; ++i) {
      beta0(i) = problem.beta_hi(i) - s * (problem.beta_hi(i) - problem.beta_lo(i));
      delta0(i) = problem.delta_lo(i) + s * (problem.delta_hi(i) - problem.delta_lo(i));
    }
    if (problem.spend(beta0, delta0) <= 0.5 * problem.budget) break;
    s *= 0.25;
    if (tries > 200)
      throw std::runtime_error(
          "solve_allocation: no-spend corner exceeds the budget; infeasible");
  }

  // u from the Perron vector of the nonnegative surrogate at the start point,
  // floored away from zero; lambda set 5% above the induced feasibility value.
  Eigen::MatrixXd m0 =
      problem.graph.adjacency().array().colwise() * beta0.array();
  m0.diagonal() += (phi - delta0.array()).matrix();
  Eigen::VectorXd u = lambda_max(m0).right;
  double floor = 1e-8 * u.maxCoeff();
  u = u.cwiseMax(floor);
  Eigen::VectorXd mu = m0 * u;
  double lam0 = 0.0;
  for (int i = 0; i < n; ++i) lam0 = std::max(lam0, mu(i) / u(i));
  lam0 *= 1.05;

  Eigen::VectorXd x0 = Eigen::VectorXd::Ones(b.program.arity);
  x0(b.lambda_var) = lam0;
  // the pinned u is the first active node; normalize u against it
  double pin_value = 1.0;
  for (int i = 0; i < n; ++i)
    if (b.u_var[i] == -1) {
      bool active = false;
      for (const Edge& e : problem.graph.edges())
        if (e.src == i || e.dst == i) active = true;
      if (active) {
        pin_value = u(i);
        break;
      }
    }
  for (int i = 0; i < n; ++i) {
    if (b.beta_var[i] >= 0) x0(b.beta_var[i]) = beta0(i);
    if (b.delta_var[i] >= 0) x0(b.delta_var[i]) = phi - delta0(i);
    if (b.u_var[i] >= 0) x0(b.u_var[i]) = u(i) / pin_value;
  }

  GpSolution gs = solve_gp(b.program, x0, opts);

  AllocationResult r;
  r.phi = phi;
  r.budget = problem.budget;
  r.gp_lambda = gs.x(b.lambda_var);
  r.beta.resize(n);
  r.delta.resize(n);
  r.u.resize(n);
  for (int i = 0; i < n; ++i) {
    r.beta(i) = b.beta_var[i] >= 0 ? gs.x(b.beta_var[i]) : problem.beta_hi(i);
    r.delta(i) = b.delta_var[i] >= 0 ? phi - gs.x(b.delta_var[i]) : problem.delta_lo(i);
    r.u(i) = b.u_var[i] >= 0 ? gs.x(b.u_var[i]) : 1.0;
  }
  r.u *= static_cast<double>(n) / r.u.sum();
  r.spend = problem.spend(r.beta, r.delta);
  r.lambda_bd =
      lambda_max(stability_matrix_for(problem, r.beta, r.delta)).lambda_max;
  r.outer_iterations = gs.outer_iterations;
  r.newton_iterations = gs.newton_iterations;
  r.kkt_residual = gs.kkt_residual;
  r.gap_surrogate = gs.gap_surrogate;
  return r;
}

double decay_rate(const AllocationResult& result, const AllocationProblem& problem) {
  double lam =
      lambda_max(stability_matrix_for(problem, result.beta, result.delta)).lambda_max;
  if (lam > result.gp_lambda - result.phi + 1e-6)
    throw std::runtime_error(
        "decay_rate: recomputed lambda_max(B-D) exceeds lambda* - phi; "
        "allocation solver bug");
  return lam;
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

namespace {

double cubic_max_real_root(double b2, double b1, double b0) {
  // monic cubic x^3 + b2 x^2 + b1 x + b0
  double p = b1 - b2 * b2 / 3.0;
  double q = 2.0 * b2 * b2 * b2 / 27.0 - b2 * b1 / 3.0 + b0;
  double shift = -b2 / 3.0;
  double disc = q * q / 4.0 + p * p * p / 27.0;
  if (disc > 0.0) {
    double root = std::sqrt(disc);
    double t = std::cbrt(-q / 2.0 + root) + std::cbrt(-q / 2.0 - root);
    return t + shift;
  }
  if (p >= 0.0) return std::cbrt(-q) + shift;  // p ~ 0, triple-ish root
  double m = 2.0 * std::sqrt(-p / 3.0);
  double arg = 3.0 * q / (p * m);
  arg = std::min(1.0, std::max(-1.0, arg));
  double theta = std::acos(arg) / 3.0;
  return m * std::cos(theta) + shift;
}

}  // namespace

double small_metzler_lambda(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  switch (n) {
    case 1:
      return m(0, 0);
    case 2: {
      double tr = m(0, 0) + m(1, 1);
      double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
      double disc = tr * tr - 4.0 * det;  // >= 0 for Metzler
      return 0.5 * (tr + std::sqrt(std::max(disc, 0.0)));
    }
    case 3: {
      double tr = m.trace();
      double c2 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) +
                  m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0) +
                  m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
      double det = m.determinant();
      return cubic_max_real_root(-tr, c2, -det);
    }
    default: {
      Eigen::EigenSolver<Eigen::MatrixXd> es(m);
      double best = es.eigenvalues()(0).real();
      for (int i = 1; i < es.eigenvalues().size(); ++i)
        best = std::max(best, es.eigenvalues()(i).real());
      return best;
    }
  }
}

BruteForceResult brute_force_allocation(const AllocationProblem& problem,
                                        int grid_density) {
  problem.validate();
  const int n = problem.node_count();
  if (n > 4)
    throw std::invalid_argument("brute_force_allocation: n <= 4 only");
  if (grid_density < 2 || grid_density > 50)
    throw std::invalid_argument("brute_force_allocation: grid density in [2, 50]");
  const double phi = problem.phi();
  const double a = problem.delta_exponent;

  // Grid variables: all free betas, all free deltas except one "fill" delta
  // (or, lacking any free delta, one fill beta) that absorbs the leftover
  // budget exactly — the objective is monotone in every single rate.
  struct Var {
    bool is_beta;
    int node;
    double lo, hi;
  };
  std::vector<Var> grid_vars;
  int fill_delta = -1, fill_beta = -1;
  for (int i = n - 1; i >= 0; --i)
    if (problem.delta_lo(i) < problem.delta_hi(i)) {
      fill_delta = i;
      break;
    }
  if (fill_delta < 0)
    for (int i = n - 1; i >= 0; --i)
      if (problem.beta_lo(i) < problem.beta_hi(i)) {
        fill_beta = i;
        break;
      }
  for (int i = 0; i < n; ++i) {
    if (problem.beta_lo(i) < problem.beta_hi(i) && i != fill_beta)
      grid_vars.push_back({true, i, problem.beta_lo(i), problem.beta_hi(i)});
    if (problem.delta_lo(i) < problem.delta_hi(i) && i != fill_delta)
      grid_vars.push_back({false, i, problem.delta_lo(i), problem.delta_hi(i)});
  }

  BruteForceResult best;
  best.beta = problem.beta_hi;
  best.delta = problem.delta_lo;
  best.lambda_bd =
      small_metzler_lambda(stability_matrix_for(problem, best.beta, best.delta));
  best.spend = 0.0;

  Eigen::VectorXd beta = problem.beta_hi;
  Eigen::VectorXd delta = problem.delta_lo;

  auto evaluate_leaf = [&](double spent) {
    if (fill_delta >= 0) {
      double left = problem.budget - spent;
      double c = problem.delta_cost(fill_delta);
      double d;
      if (c <= 0.0) {
        d = problem.delta_hi(fill_delta);
      } else {
        double t = left / c +
                   std::pow(phi - problem.delta_lo(fill_delta), -a);
        d = phi - std::pow(t, -1.0 / a);
        d = std::min(d, problem.delta_hi(fill_delta));
      }
      delta(fill_delta) = std::max(d, problem.delta_lo(fill_delta));
    } else if (fill_beta >= 0) {
      double left = problem.budget - spent;
      double c = problem.beta_cost(fill_beta);
      double bval;
      if (c <= 0.0) {
        bval = problem.beta_lo(fill_beta);
      } else {
        bval = 1.0 / (left / c + 1.0 / problem.beta_hi(fill_beta));
        bval = std::max(bval, problem.beta_lo(fill_beta));
      }
      beta(fill_beta) = std::min(bval, problem.beta_hi(fill_beta));
    }
    double lam =
        small_metzler_lambda(stability_matrix_for(problem, beta, delta));
    ++best.evaluated;
    if (lam < best.lambda_bd - 1e-15) {
      best.lambda_bd = lam;
      best.beta = beta;
      best.delta = delta;
      best.spend = problem.spend(beta, delta);
    }
  };

  const double slack = 1.0 + 1e-12;
  std::vector<std::pair<double, double>> ranges(grid_vars.size());
  for (std::size_t v = 0; v < grid_vars.size(); ++v)
    ranges[v] = {grid_vars[v].lo, grid_vars[v].hi};

  // Budget-free relaxation of a subtree: undecided rates at their most
  // aggressive ends. lambda_max is monotone in every rate, so a bound at or
  // above the incumbent prunes the subtree.
  auto subtree_bound = [&](std::size_t v) {
    Eigen::VectorXd b2 = beta, d2 = delta;
    for (std::size_t w = v; w < grid_vars.size(); ++w) {
      const Var& var = grid_vars[w];
      if (var.is_beta)
        b2(var.node) = ranges[w].first;
      else
        d2(var.node) = ranges[w].second;
    }
    if (fill_delta >= 0) d2(fill_delta) = problem.delta_hi(fill_delta);
    if (fill_beta >= 0) b2(fill_beta) = problem.beta_lo(fill_beta);
    return small_metzler_lambda(stability_matrix_for(problem, b2, d2));
  };

  std::function<void(std::size_t, double)> walk = [&](std::size_t v, double spent) {
    if (spent > problem.budget * slack) return;
    if (v == grid_vars.size()) {
      evaluate_leaf(spent);
      return;
    }
    if (subtree_bound(v) >= best.lambda_bd - 1e-15) return;
    const Var& var = grid_vars[v];
    auto [lo, hi] = ranges[v];
    for (int k = 0; k < grid_density; ++k) {
      double x = lo + (hi - lo) * k / (grid_density - 1.0);
      double cost;
      if (var.is_beta) {
        beta(var.node) = x;
        cost = problem.beta_cost_of(var.node, x);
      } else {
        delta(var.node) = x;
        cost = problem.delta_cost_of(var.node, x);
      }
      walk(v + 1, spent + cost);
    }
    if (var.is_beta)
      beta(var.node) = problem.beta_hi(var.node);
    else
      delta(var.node) = problem.delta_lo(var.node);
  };

  for (int pass = 0; pass < 3; ++pass) {
    if (pass > 0) {
      // shrink each range to +-2 cells around the incumbent
      for (std::size_t v = 0; v < grid_vars.size(); ++v) {
        const Var& var = grid_vars[v];
        double cell =
            (ranges[v].second - ranges[v].first) / (grid_density - 1.0);
        double center = var.is_beta ? best.beta(var.node) : best.delta(var.node);
        ranges[v] = {std::max(var.lo, center - 2.0 * cell),
                     std::min(var.hi, center + 2.0 * cell)};
      }
    }
    walk(0, 0.0);
  }
  return best;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(i) = a[i].get<double>();
  return v;
}

}  // namespace

std::string AllocationProblem::to_json() const {
  nlohmann::json j;
  j["graph"]["n"] = graph.node_count();
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : graph.edges())
    edges.push_back({e.src, e.dst, e.weight});
  j["graph"]["edges"] = edges;
  j["beta_lo"] = vector_to_json(beta_lo);
  j["beta_hi"] = vector_to_json(beta_hi);
  j["delta_lo"] = vector_to_json(delta_lo);
  j["delta_hi"] = vector_to_json(delta_hi);
  j["beta_cost"] = vector_to_json(beta_cost);
  j["delta_cost"] = vector_to_json(delta_cost);
  j["delta_exponent"] = delta_exponent;
  j["budget"] = budget;
  return j.dump(2) + "\n";
}

AllocationProblem AllocationProblem::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  AllocationProblem p;
  Graph g(j.at("graph").at("n").get<int>());
  for (const auto& e : j.at("graph").at("edges"))
    g.add_edge(e.at(0).get<int>(), e.at(1).get<int>(),
               e.size() > 2 ? e.at(2).get<double>() : 1.0);
  p.graph = g;
  p.beta_lo = vector_from_json(j.at("beta_lo"));
  p.beta_hi = vector_from_json(j.at("beta_hi"));
  p.delta_lo = vector_from_json(j.at("delta_lo"));
  p.delta_hi = vector_from_json(j.at("delta_hi"));
  p.beta_cost = vector_from_json(j.at("beta_cost"));
  p.delta_cost = vector_from_json(j.at("delta_cost"));
  p.delta_exponent = j.at("delta_exponent").get<double>();
  p.budget = j.at("budget").get<double>();
  p.validate();
  return p;
}

std::string AllocationResult::to_json() const {
  nlohmann::json j;
  j["beta"] = vector_to_json(beta);
  j["delta"] = vector_to_json(delta);
  j["u"] = vector_to_json(u);
  j["gp_lambda"] = gp_lambda;
  j["phi"] = phi;
  j["lambda_bd"] = lambda_bd;
  j["decay_rate_bound"] = gp_lambda - phi;
  j["spend"] = spend;
  j["budget"] = budget;
  j["diagnostics"]["outer_iterations"] = outer_iterations;
  j["diagnostics"]["newton_iterations"] = newton_iterations;
  j["diagnostics"]["kkt_residual"] = kkt_residual;
  j["diagnostics"]["gap_surrogate"] = gap_surrogate;
  return j.dump(2) + "\n";
}

}  // namespace epinet
