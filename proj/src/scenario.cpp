#include "epinet/scenario.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "epinet/allocation.hpp"
#include "epinet/graph.hpp"
#include "epinet/master_equation.hpp"
#include "epinet/meanfield.hpp"
#include "epinet/ode.hpp"
#include "epinet/optctrl.hpp"
#include "epinet/rates.hpp"
#include "epinet/spectral.hpp"
#include "epinet/stochastic.hpp"
#include "epinet/svg.hpp"
#include "json.hpp"

namespace epinet {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Field access with $.path diagnostics
// ---------------------------------------------------------------------------

class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ScenarioError(path_, "expected an object");
  }

  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return j_.contains(key); }

  Fields child(const std::string& key) const {
    return Fields(at(key), path_ + "." + key);
  }

  double number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ScenarioError(path_ + "." + key, "expected a number");
    return v.get<double>();
  }

  double number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  int integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer())
      throw ScenarioError(path_ + "." + key, "expected an integer");
    return v.get<int>();
  }

  int integer_or(const std::string& key, int fallback) const {
    return has(key) ? integer(key) : fallback;
  }

  std::uint64_t seed_or(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ScenarioError(path_ + "." + key, "expected a nonnegative integer seed");
    return v.get<std::uint64_t>();
  }

  std::string text(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ScenarioError(path_ + "." + key, "expected a string");
    return v.get<std::string>();
  }

  std::string text_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
  }

  std::vector<double> number_list(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) throw ScenarioError(path_ + "." + key, "expected an array");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number())
        throw ScenarioError(path_ + "." + key, "expected numeric entries");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<int> integer_list(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) throw ScenarioError(path_ + "." + key, "expected an array");
    std::vector<int> out;
    for (const auto& e : v) {
      if (!e.is_number_integer())
        throw ScenarioError(path_ + "." + key, "expected integer entries");
      out.push_back(e.get<int>());
    }
    return out;
  }

  /// Accepts a scalar (broadcast) or an array of length n.
  Eigen::VectorXd vector_or_scalar(const std::string& key, int n) const {
    const json& v = at(key);
    if (v.is_number()) return Eigen::VectorXd::Constant(n, v.get<double>());
    if (v.is_array()) {
      if (static_cast<int>(v.size()) != n)
        throw ScenarioError(path_ + "." + key,
                            "expected length " + std::to_string(n));
      Eigen::VectorXd out(n);
      for (int i = 0; i < n; ++i) {
        if (!v[i].is_number())
          throw ScenarioError(path_ + "." + key, "expected numeric entries");
        out(i) = v[i].get<double>();
      }
      return out;
    }
    throw ScenarioError(path_ + "." + key, "expected a number or an array");
  }

  Eigen::VectorXd vector_or_scalar_or(const std::string& key, int n,
                                      double fallback) const {
    if (!has(key)) return Eigen::VectorXd::Constant(n, fallback);
    return vector_or_scalar(key, n);
  }

 private:
  const json& at(const std::string& key) const {
    if (!j_.contains(key))
      throw ScenarioError(path_ + "." + key, "missing required field");
    return j_[key];
  }

  const json& j_;
  std::string path_;
};

template <typename Fn>
auto guard(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(path, e.what());
  }
}

// ---------------------------------------------------------------------------
// Shared parsers
// ---------------------------------------------------------------------------

Graph parse_graph(const Fields& g) {
  std::string kind = g.text("kind");
  return guard(g.path(), [&]() -> Graph {
    if (kind == "complete") return make_complete(g.integer("n"));
    if (kind == "star") return make_star(g.integer("n"));
    if (kind == "path") return make_path(g.integer("n"));
    if (kind == "grid") {
      int rows = g.integer("rows"), cols = g.integer("cols");
      if (g.has("n") && g.integer("n") != rows * cols)
        throw ScenarioError(g.path() + ".n", "n does not match rows * cols");
      return make_grid(rows, cols);
    }
    if (kind == "erdos_renyi")
      return make_erdos_renyi(g.integer("n"), g.number("p"), g.seed_or("seed", 0));
    if (kind == "edge_list") return load_edge_list_file(g.text("path"));
    if (kind == "inline") {
      Graph graph(g.integer("n"));
      const json& edges = g.raw().contains("edges") ? g.raw()["edges"] : json::array();
      for (const auto& e : edges) {
        if (!e.is_array() || e.size() < 2)
          throw ScenarioError(g.path() + ".edges", "expected [src, dst, weight?]");
        graph.add_edge(e[0].get<int>(), e[1].get<int>(),
                       e.size() > 2 ? e[2].get<double>() : 1.0);
      }
      return graph;
    }
    throw ScenarioError(g.path() + ".kind", "unknown graph kind '" + kind + "'");
  });
}

RateModel parse_rates(const Fields& r, const Graph& graph) {
  const int n = graph.node_count();
  return guard(r.path(), [&]() -> RateModel {
    if (r.has("beta_matrix")) {
      const json& bm = r.raw()["beta_matrix"];
      if (!bm.is_array() || static_cast<int>(bm.size()) != n)
        throw ScenarioError(r.path() + ".beta_matrix", "expected n rows");
      Eigen::MatrixXd beta(n, n);
      for (int i = 0; i < n; ++i) {
        if (!bm[i].is_array() || static_cast<int>(bm[i].size()) != n)
          throw ScenarioError(r.path() + ".beta_matrix", "expected n columns");
        for (int j = 0; j < n; ++j) beta(i, j) = bm[i][j].get<double>();
      }
      return RateModel::heterogeneous(graph, beta, r.vector_or_scalar("delta", n));
    }
    const json& beta = r.raw().contains("beta") ? r.raw()["beta"] : json();
    if (beta.is_number() && r.raw()["delta"].is_number())
      return RateModel::homogeneous(graph, beta.get<double>(), r.number("delta"));
    return RateModel::node_rates(graph, r.vector_or_scalar("beta", n),
                                 r.vector_or_scalar("delta", n));
  });
}

std::vector<Compartment> parse_initial_infected(const Fields& s, int n) {
  std::vector<Compartment> x0(n, Compartment::S);
  if (!s.has("initial_infected"))
    throw ScenarioError(s.path() + ".initial_infected", "missing required field");
  for (int v : s.integer_list("initial_infected")) {
    if (v < 0 || v >= n)
      throw ScenarioError(s.path() + ".initial_infected",
                          "node index " + std::to_string(v) + " out of range");
    x0[v] = Compartment::I;
  }
  return x0;
}

Feedback parse_feedback(const Fields& parent, const std::string& key) {
  if (!parent.has(key)) return Feedback::zero();
  Fields f = parent.child(key);
  std::string kind = f.text("kind");
  double gain = f.number_or("gain", 0.0);
  return guard(f.path(), [&]() -> Feedback {
    if (kind == "zero") return Feedback::zero();
    if (kind == "constant") return Feedback::constant(gain);
    if (kind == "linear_infected") return Feedback::linear_infected(gain);
    if (kind == "saturating") return Feedback::saturating(gain);
    throw ScenarioError(f.path() + ".kind", "unknown feedback kind '" + kind + "'");
  });
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

struct OutputDir {
  std::filesystem::path dir;
  std::vector<std::string> written;

  void write(const std::string& name, const std::string& content) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("failed to write " + (dir / name).string());
    written.push_back(name);
  }
};

std::string marginals_csv(const MarginalEstimate& est) {
  std::ostringstream out;
  out << "t,node,p_infected,std_error\n";
  char buf[40];
  for (std::size_t s = 0; s < est.times.size(); ++s)
    for (int i = 0; i < est.mean.cols(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.12g", est.times[s]);
      out << buf << "," << i;
      std::snprintf(buf, sizeof(buf), "%.12g", est.mean(s, i));
      out << "," << buf;
      std::snprintf(buf, sizeof(buf), "%.12g", est.std_error(s, i));
      out << "," << buf << "\n";
    }
  return out.str();
}

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

// Mean-field SIS marginals recorded exactly at the requested times.
Eigen::MatrixXd meanfield_marginals_at(const RateModel& rates,
                                       const Eigen::VectorXd& p0,
                                       const std::vector<double>& times, double dt) {
  Eigen::MatrixXd out(times.size(), p0.size());
  Eigen::VectorXd p = p0;
  Rhs rhs = [&rates](double, const Eigen::VectorXd& x, Eigen::VectorXd& dx) {
    dx = rhs_network_sis(x, rates);
  };
  double t = 0.0;
  for (std::size_t s = 0; s < times.size(); ++s) {
    double span = times[s] - t;
    if (span < -1e-12)
      throw std::invalid_argument("sample times must be nondecreasing");
    if (span > 0.0) {
      long steps = std::max(1L, std::lround(std::ceil(span / dt - 1e-9)));
      double h = span / steps;
      for (long k = 0; k < steps; ++k) rk4_step(rhs, t + k * h, h, p);
      t = times[s];
    }
    out.row(s) = p;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Command handlers
// ---------------------------------------------------------------------------

json cmd_threshold(const Fields& sc, OutputDir&) {
  Graph graph = parse_graph(sc.child("graph"));
  RateModel rates = parse_rates(sc.child("rates"), graph);
  ThresholdReport r = guard(sc.path(), [&] { return check_threshold(graph, rates); });

  json h;
  h["lambda_a"] = lambda_max(graph.adjacency()).lambda_max;
  h["lambda_bd"] = r.lambda_bd;
  h["margin"] = r.margin;
  h["verdict"] = r.stable_disease_free ? "stable_disease_free" : "endemic";
  h["strongly_connected"] = r.strongly_connected;
  if (r.tau) {
    h["tau"] = *r.tau;
    if (r.inv_lambda_a) h["inv_lambda_a"] = *r.inv_lambda_a;
    if (r.tau_margin) h["tau_margin"] = *r.tau_margin;
    auto bound = theorem2_bound(graph, *rates.beta_scalar, *rates.delta_scalar);
    if (bound)
      h["extinction_time_bound"] = *bound;
    else
      h["extinction_time_bound"] = "inapplicable";
  }
  return h;
}

json cmd_simulate(const Fields& sc, OutputDir& out, std::uint64_t seed) {
  std::string model = sc.text_or("model", "network_sis");
  json h;
  h["seed"] = seed;
  if (model == "network_sis") {
    Graph graph = parse_graph(sc.child("graph"));
    RateModel rates = parse_rates(sc.child("rates"), graph);
    auto x0 = parse_initial_infected(sc, graph.node_count());
    int runs = sc.integer_or("runs", 100);
    if (runs < 1) throw ScenarioError(sc.path() + ".runs", "must be >= 1");
    double t_cap = sc.number_or("t_cap", default_t_cap(rates));
    if (!(t_cap > 0.0)) throw ScenarioError(sc.path() + ".t_cap", "must be > 0");

    ExtinctionStats stats = guard(sc.path(), [&] {
      return estimate_extinction_time(graph, rates, x0, runs, seed, t_cap);
    });
    out.write("summary.json", stats.to_json());
    SimOutcome first = ssa_network_sis(graph, rates, x0, seed, t_cap);
    out.write("events.csv", first.events_to_csv());
    if (sc.has("sample_times")) {
      auto times = sc.number_list("sample_times");
      MarginalEstimate est = guard(sc.path(), [&] {
        return estimate_marginals(graph, rates, x0, times, runs, seed);
      });
      out.write("marginals.csv", marginals_csv(est));
    }
    h["runs"] = stats.runs;
    h["censored"] = stats.censored;
    h["t_cap"] = t_cap;
    if (stats.mean) h["mean_extinction_time"] = *stats.mean;
    if (stats.std_error) h["std_error"] = *stats.std_error;
    if (rates.beta_scalar) {
      auto bound = theorem2_bound(graph, *rates.beta_scalar, *rates.delta_scalar);
      if (bound) h["extinction_time_bound"] = *bound;
    }
  } else if (model == "population_sis" || model == "population_sir") {
    PopulationModel pm = (model == "population_sis") ? PopulationModel::SIS
                                                     : PopulationModel::SIR;
    Fields r = sc.child("rates");
    int n = sc.integer("n");
    int infected = sc.integer("initial_infected_count");
    if (infected < 0 || infected > n)
      throw ScenarioError(sc.path() + ".initial_infected_count", "must be in [0, n]");
    int runs = sc.integer_or("runs", 100);
    double beta = r.number("beta"), delta = r.number("delta");
    double t_cap =
        sc.number_or("t_cap", 10.0 * (std::log(double(n)) + 1.0) / delta);
    PopulationCounts counts{n - infected, infected, 0};
    std::vector<double> samples;
    int censored = 0;
    SimOutcome first;
    for (int k = 0; k < runs; ++k) {
      SimOutcome o = guard(sc.path(), [&] {
        return ssa_population(pm, n, beta, delta, counts, seed + k, t_cap);
      });
      if (k == 0) first = o;
      if (o.absorbed)
        samples.push_back(o.absorption_time);
      else
        ++censored;
    }
    out.write("events.csv", first.events_to_csv());
    h["runs"] = runs;
    h["censored"] = censored;
    h["t_cap"] = t_cap;
    if (!samples.empty()) {
      double mean = 0.0;
      for (double s : samples) mean += s;
      mean /= samples.size();
      h["mean_extinction_time"] = mean;
      if (samples.size() >= 2) {
        double ss = 0.0;
        for (double s : samples) ss += (s - mean) * (s - mean);
        h["std_error"] = std::sqrt(ss / (samples.size() - 1.0) / samples.size());
      }
    }
    json summary;
    summary["runs"] = runs;
    summary["censored"] = censored;
    summary["mean"] = h.contains("mean_extinction_time")
                          ? h["mean_extinction_time"]
                          : json();
    summary["std_error"] = h.contains("std_error") ? h["std_error"] : json();
    summary["master_seed"] = seed;
    summary["t_cap"] = t_cap;
    out.write("summary.json", summary.dump(2) + "\n");
  } else {
    throw ScenarioError(sc.path() + ".model", "unknown model '" + model + "'");
  }
  return h;
}

json cmd_meanfield(const Fields& sc, OutputDir& out) {
  std::string model = sc.text_or("model", "network_sis");
  double horizon = sc.number("horizon");
  double dt = sc.number_or("dt", 1e-3);
  if (!(horizon > 0.0)) throw ScenarioError(sc.path() + ".horizon", "must be > 0");
  if (!(dt > 0.0)) throw ScenarioError(sc.path() + ".dt", "must be > 0");

  OdeModel ode;
  Eigen::VectorXd x0;
  json h;

  if (model == "population_sis") {
    Fields r = sc.child("rates");
    ode = make_population_sis(r.number("beta"), r.number("delta"));
    x0 = Eigen::VectorXd::Constant(1, sc.number("p0"));
    h["closed_form_final"] = guard(sc.path(), [&] {
      return closed_form_population_sis(r.number("beta"), r.number("delta"),
                                        sc.number("p0"), horizon);
    });
  } else if (model == "population_sir") {
    Fields r = sc.child("rates");
    ode = make_population_sir(r.number("beta"), r.number("delta"));
    double i0 = sc.number("i0"), r0 = sc.number_or("r0", 0.0);
    x0 = Eigen::Vector3d(1.0 - i0 - r0, i0, r0);
  } else if (model == "population_spis") {
    Fields r = sc.child("rates");
    ode = make_population_spis(r.number("beta"), r.number("delta"),
                               parse_feedback(sc, "protect"),
                               parse_feedback(sc, "unprotect"));
    double i0 = sc.number("i0"), p0 = sc.number_or("protected0", 0.0);
    x0 = Eigen::Vector3d(1.0 - i0 - p0, i0, p0);
  } else if (model == "network_sis" || model == "metapopulation") {
    Graph graph = parse_graph(sc.child("graph"));
    RateModel rates = parse_rates(sc.child("rates"), graph);
    if (model == "metapopulation" && sc.has("population_sizes"))
      rates.population_sizes =
          sc.vector_or_scalar("population_sizes", graph.node_count());
    ode = make_network_sis(rates);
    x0 = sc.vector_or_scalar("p0", graph.node_count());
    ThresholdReport tr = check_threshold(graph, rates);
    h["lambda_bd"] = tr.lambda_bd;
    h["verdict"] = tr.stable_disease_free ? "stable_disease_free" : "endemic";
    EndemicResult eq = guard(sc.path(), [&] { return endemic_equilibrium(rates); });
    if (eq.endemic) {
      h["endemic_equilibrium"] = vector_json(eq.p);
      h["endemic_residual"] = eq.residual;
    } else {
      h["endemic_equilibrium"] = "disease-free";
    }
  } else if (model == "network_spis") {
    Graph graph = parse_graph(sc.child("graph"));
    Fields r = sc.child("rates");
    SpisRates rates{r.number("beta"), r.number("beta0"), r.number("delta")};
    ode = guard(sc.path(), [&] {
      return make_network_spis(graph, rates, parse_feedback(sc, "protect"));
    });
    const int n = graph.node_count();
    x0.resize(3 * n);
    x0.segment(n, n) = sc.vector_or_scalar("i0", n);
    x0.segment(2 * n, n) = sc.vector_or_scalar_or("protected0", n, 0.0);
    x0.segment(0, n) = Eigen::VectorXd::Ones(n) - x0.segment(n, n) -
                       x0.segment(2 * n, n);
  } else if (model == "bivirus") {
    Graph g1 = parse_graph(sc.child("graph"));
    Graph g2 = sc.has("graph2") ? parse_graph(sc.child("graph2")) : g1;
    Fields r = sc.child("rates");
    const int n = g1.node_count();
    BivirusRates rates;
    rates.beta1 = r.vector_or_scalar("beta1", n);
    rates.delta1 = r.vector_or_scalar("delta1", n);
    rates.beta2 = r.vector_or_scalar("beta2", n);
    rates.delta2 = r.vector_or_scalar("delta2", n);
    ode = guard(sc.path(), [&] { return make_bivirus(g1, g2, rates); });
    x0.resize(3 * n);
    x0.segment(n, n) = sc.vector_or_scalar("i1_0", n);
    x0.segment(2 * n, n) = sc.vector_or_scalar("i2_0", n);
    x0.segment(0, n) = Eigen::VectorXd::Ones(n) - x0.segment(n, n) -
                       x0.segment(2 * n, n);
  } else if (model == "sir_patching") {
    Graph graph = parse_graph(sc.child("graph"));
    RateModel rates = parse_rates(sc.child("rates"), graph);
    const int n = graph.node_count();
    Eigen::VectorXd pi = sc.vector_or_scalar_or("pi", n, 1.0);
    Eigen::VectorXd u_max = sc.vector_or_scalar_or("u_max", n, 1.0);
    Eigen::VectorXd u = sc.vector_or_scalar_or("u", n, 0.0);
    ode = guard(sc.path(), [&] { return make_sir_patching(rates, pi, u, u_max); });
    x0.resize(3 * n);
    x0.segment(n, n) = sc.vector_or_scalar("i0", n);
    x0.segment(2 * n, n) = sc.vector_or_scalar_or("r0", n, 0.0);
    x0.segment(0, n) = Eigen::VectorXd::Ones(n) - x0.segment(n, n) -
                       x0.segment(2 * n, n);
  } else {
    throw ScenarioError(sc.path() + ".model", "unknown model '" + model + "'");
  }

  Trajectory traj = guard(sc.path(), [&] { return integrate(ode, x0, horizon, dt); });
  out.write("trajectory.csv", traj.to_csv());

  std::vector<SvgSeries> series;
  int cols = static_cast<int>(traj.states.cols());
  for (int j = 0; j < cols && j < 12; ++j) {
    SvgSeries s;
    s.label = traj.labels[j];
    // decimate long trajectories for the figure
    int stride = std::max(1, traj.samples() / 1000);
    for (int k = 0; k < traj.samples(); k += stride) {
      s.x.push_back(traj.times[k]);
      s.y.push_back(traj.states(k, j));
    }
    series.push_back(std::move(s));
  }
  out.write("trajectory.svg", render_line_plot(ode.name, series, "t", "probability"));

  h["model"] = model;
  h["samples"] = traj.samples();
  h["final_state"] = vector_json(traj.final_state());
  return h;
}

json cmd_allocate(const Fields& sc, OutputDir& out) {
  Fields pr = sc.child("problem");
  Graph graph = parse_graph(pr.child("graph"));
  const int n = graph.node_count();
  AllocationProblem problem;
  problem.graph = graph;
  problem.beta_lo = pr.vector_or_scalar("beta_lo", n);
  problem.beta_hi = pr.vector_or_scalar("beta_hi", n);
  problem.delta_lo = pr.vector_or_scalar("delta_lo", n);
  problem.delta_hi = pr.vector_or_scalar("delta_hi", n);
  problem.beta_cost = pr.vector_or_scalar_or("beta_cost", n, 1.0);
  problem.delta_cost = pr.vector_or_scalar_or("delta_cost", n, 1.0);
  problem.delta_exponent = pr.number_or("delta_exponent", 1.0);
  problem.budget = pr.number("budget");
  guard(pr.path(), [&] { problem.validate(); return 0; });

  AllocationResult result = solve_allocation(problem);
  double guaranteed = decay_rate(result, problem);
  out.write("allocation.json", result.to_json());
  out.write("problem.json", problem.to_json());

  json h;
  h["lambda_bd_before"] = lambda_max(stability_matrix_for(problem, problem.beta_hi,
                                                          problem.delta_lo))
                              .lambda_max;
  h["lambda_bd_after"] = result.lambda_bd;
  h["decay_rate_bound"] = result.gp_lambda - result.phi;
  h["decay_rate_recomputed"] = guaranteed;
  h["gp_lambda"] = result.gp_lambda;
  h["phi"] = result.phi;
  h["spend"] = result.spend;
  h["budget"] = result.budget;
  h["kkt_residual"] = result.kkt_residual;
  return h;
}

json cmd_optctrl(const Fields& sc, OutputDir& out) {
  std::string kind = sc.text_or("problem_kind", "population_sis");
  json h;
  h["problem_kind"] = kind;
  if (kind == "population_sis") {
    PopulationControlProblem p;
    Fields r = sc.child("rates");
    p.beta = r.number("beta");
    p.delta1 = r.number("delta1");
    p.delta2 = r.number("delta2");
    Fields c = sc.child("costs");
    p.infection_cost = c.number("infection");
    p.treatment_cost = c.number("treatment");
    p.horizon = sc.number("horizon");
    p.dt = sc.number_or("dt", 1e-3);
    double p0 = sc.number("p0");
    guard(sc.path(), [&] { p.validate(); return 0; });

    ClassifyResult cls = classify_population_policy(p);
    PopulationFbsResult fbs = fbs_population_sis(p, p0);
    out.write("schedule.csv", fbs.schedule.to_csv());
    out.write("schedule.json", fbs.schedule.to_json());

    json baselines;
    for (double u : {0.0, 1.0}) {
      PolicySchedule s = PolicySchedule::constant(1, u, p.horizon,
                                                  Eigen::VectorXd::Zero(1),
                                                  Eigen::VectorXd::Ones(1));
      baselines["u_" + std::to_string(static_cast<int>(u))] =
          evaluate_objective_population(
              p, s, simulate_controlled_population(p, s, p0));
    }
    h["classification"] = (cls.verdict == PolicyClass::TreatThenStop)
                              ? "treat_then_stop"
                              : "never_treat";
    h["degenerate_boundary"] = cls.degenerate;
    h["objective"] = fbs.objective;
    h["baselines"] = baselines;
    h["switch_count"] = fbs.switch_count;
    h["switch_times"] = fbs.schedule.signals[0].switch_times;
    h["sweeps"] = fbs.sweeps;
  } else if (kind == "sir_network") {
    SirNetworkControlProblem p;
    p.graph = parse_graph(sc.child("graph"));
    const int n = p.graph.node_count();
    p.rates = parse_rates(sc.child("rates"), p.graph);
    p.pi = sc.vector_or_scalar_or("pi", n, 1.0);
    p.u_max = sc.vector_or_scalar_or("u_max", n, 1.0);
    Fields c = sc.child("costs");
    p.ell = c.vector_or_scalar_or("recovery_benefit", n, 0.0);
    p.c = c.vector_or_scalar("infection", n);
    p.h1 = c.vector_or_scalar_or("control_h1", n, 0.0);
    p.h2 = c.vector_or_scalar_or("control_h2", n, 0.0);
    p.horizon = sc.number("horizon");
    p.dt = sc.number_or("dt", 1e-3);
    guard(sc.path(), [&] { p.validate(); return 0; });

    Eigen::VectorXd x0(3 * n);
    x0.segment(n, n) = sc.vector_or_scalar("i0", n);
    x0.segment(2 * n, n) = sc.vector_or_scalar("r0", n);
    x0.segment(0, n) =
        Eigen::VectorXd::Ones(n) - x0.segment(n, n) - x0.segment(2 * n, n);

    NetworkFbsResult fbs = fbs_sir_network(p, x0);
    out.write("schedule.csv", fbs.schedule.to_csv());
    out.write("schedule.json", fbs.schedule.to_json());
    json baselines;
    for (int mode = 0; mode < 2; ++mode) {
      PolicySchedule s =
          (mode == 0)
              ? PolicySchedule::constant(n, 0.0, p.horizon,
                                         Eigen::VectorXd::Zero(n), p.u_max)
              : PolicySchedule{{}, p.horizon, Eigen::VectorXd::Zero(n), p.u_max};
      if (mode == 1)
        for (int i = 0; i < n; ++i)
          s.signals.push_back(PiecewiseConstant{{}, {p.u_max(i)}});
      baselines[mode == 0 ? "u_zero" : "u_max"] =
          evaluate_objective_sir(p, s, simulate_sir_network(p, x0, s));
    }
    h["objective"] = fbs.objective;
    h["baselines"] = baselines;
    h["snapped_one_switch"] = fbs.snapped;
    h["snap_rel_error"] = fbs.snap_rel_error;
    h["tau"] = vector_json(fbs.tau);
    h["sweeps"] = fbs.sweeps;
  } else if (kind == "sis_network") {
    SisNetworkControlProblem p;
    p.graph = parse_graph(sc.child("graph"));
    const int n = p.graph.node_count();
    Fields r = sc.child("rates");
    p.beta = r.number("beta") * p.graph.adjacency();
    p.delta_lo = r.number("delta_lo");
    p.delta_hi = r.number("delta_hi");
    Fields c = sc.child("costs");
    p.c = c.vector_or_scalar("infection", n);
    p.d = c.vector_or_scalar("treatment", n);
    p.horizon = sc.number("horizon");
    p.dt = sc.number_or("dt", 1e-3);
    guard(sc.path(), [&] { p.validate(); return 0; });
    Eigen::VectorXd p0 = sc.vector_or_scalar("p0", n);

    NetworkFbsResult fbs = fbs_sis_network(p, p0);
    out.write("schedule.csv", fbs.schedule.to_csv());
    out.write("schedule.json", fbs.schedule.to_json());
    json baselines;
    for (double v : {p.delta_lo, p.delta_hi}) {
      PolicySchedule s = PolicySchedule::constant(
          n, v, p.horizon, Eigen::VectorXd::Constant(n, p.delta_lo),
          Eigen::VectorXd::Constant(n, p.delta_hi));
      baselines[v == p.delta_lo ? "delta_lo" : "delta_hi"] = evaluate_objective_sis(
          p, s, simulate_sis_network_controlled(p, p0, s));
    }
    // open problem: this solver carries no optimality claim
    h["optimality"] = "heuristic_no_claim";
    h["objective"] = fbs.objective;
    h["baselines"] = baselines;
    h["sweeps"] = fbs.sweeps;
  } else {
    throw ScenarioError(sc.path() + ".problem_kind",
                        "unknown problem kind '" + kind + "'");
  }
  return h;
}

json cmd_compare(const Fields& sc, OutputDir& out, std::uint64_t seed) {
  Graph graph = parse_graph(sc.child("graph"));
  RateModel rates = parse_rates(sc.child("rates"), graph);
  const int n = graph.node_count();
  auto x0 = parse_initial_infected(sc, n);
  std::vector<double> times = sc.number_list("sample_times");
  if (times.empty())
    throw ScenarioError(sc.path() + ".sample_times", "must be nonempty");
  double dt = sc.number_or("dt", 1e-3);
  int runs = sc.integer_or("runs", 0);

  Eigen::VectorXd p0(n);
  for (int i = 0; i < n; ++i) p0(i) = (x0[i] == Compartment::I) ? 1.0 : 0.0;
  Eigen::MatrixXd mf = guard(sc.path(), [&] {
    return meanfield_marginals_at(rates, p0, times, dt);
  });

  bool exact_ok = n <= 12;
  Eigen::MatrixXd exact;
  if (exact_ok) {
    MasterSolution sol = guard(sc.path(), [&] {
      return exact_master_equation(graph, rates, point_mass_distribution(n, x0),
                                   times.back(), dt, times);
    });
    exact = sol.marginals;
  }
  MarginalEstimate ssa;
  if (runs > 0)
    ssa = guard(sc.path(),
                [&] { return estimate_marginals(graph, rates, x0, times, runs, seed); });

  std::ostringstream csv;
  csv << "t,node,meanfield,exact,ssa_mean,ssa_se\n";
  char buf[40];
  for (std::size_t s = 0; s < times.size(); ++s)
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof(buf), "%.12g", times[s]);
      csv << buf << "," << i;
      std::snprintf(buf, sizeof(buf), "%.12g", mf(s, i));
      csv << "," << buf << ",";
      if (exact_ok) {
        std::snprintf(buf, sizeof(buf), "%.12g", exact(s, i));
        csv << buf;
      }
      csv << ",";
      if (runs > 0) {
        std::snprintf(buf, sizeof(buf), "%.12g", ssa.mean(s, i));
        csv << buf;
        std::snprintf(buf, sizeof(buf), "%.12g", ssa.std_error(s, i));
        csv << "," << buf;
      } else {
        csv << ",";
      }
      csv << "\n";
    }
  out.write("compare.csv", csv.str());

  // population-average overlay figure
  std::vector<SvgSeries> series;
  SvgSeries m{"mean-field", times, {}};
  for (std::size_t s = 0; s < times.size(); ++s) m.y.push_back(mf.row(s).mean());
  series.push_back(m);
  if (exact_ok) {
    SvgSeries e{"exact", times, {}};
    for (std::size_t s = 0; s < times.size(); ++s) e.y.push_back(exact.row(s).mean());
    series.push_back(e);
  }
  if (runs > 0) {
    SvgSeries e{"ssa", times, {}};
    for (std::size_t s = 0; s < times.size(); ++s) e.y.push_back(ssa.mean.row(s).mean());
    series.push_back(e);
  }
  out.write("compare.svg",
            render_line_plot("marginal infection probability", series, "t",
                             "mean P(I)"));

  json h;
  h["nodes"] = n;
  h["sample_times"] = times;
  if (exact_ok) {
    // the mean-field curve should dominate the exact marginals
    double worst = 0.0;
    for (std::size_t s = 0; s < times.size(); ++s)
      for (int i = 0; i < n; ++i)
        worst = std::max(worst, exact(s, i) - mf(s, i));
    h["max_exact_minus_meanfield"] = worst;
    h["meanfield_dominates"] = worst <= 1e-9;
  } else {
    h["max_exact_minus_meanfield"] = "skipped (n > 12)";
  }
  if (runs > 0) h["ssa_runs"] = runs;
  return h;
}

}  // namespace

std::string RunReport::to_json() const {
  json j;
  j["command"] = command;
  j["scenario"] = json::parse(scenario_echo);
  j["headline"] = json::parse(headline);
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

RunReport run_scenario(const std::string& scenario_text, const std::string& out_dir,
                       std::optional<std::uint64_t> seed_override,
                       const std::string& expected_command) {
  auto t0 = std::chrono::steady_clock::now();
  json root;
  try {
    root = json::parse(scenario_text);
  } catch (const json::parse_error& e) {
    throw ScenarioError("$", std::string("invalid JSON: ") + e.what());
  }
  if (seed_override) root["seed"] = *seed_override;
  Fields sc(root, "$");
  std::string command = sc.text("command");
  if (!expected_command.empty() && command != expected_command)
    throw ScenarioError("$.command", "scenario declares '" + command +
                                         "' but the '" + expected_command +
                                         "' command was invoked");
  std::uint64_t seed = sc.seed_or("seed", 0);

  OutputDir out{std::filesystem::path(out_dir), {}};
  json headline;
  if (command == "threshold")
    headline = cmd_threshold(sc, out);
  else if (command == "simulate")
    headline = cmd_simulate(sc, out, seed);
  else if (command == "meanfield")
    headline = cmd_meanfield(sc, out);
  else if (command == "allocate")
    headline = cmd_allocate(sc, out);
  else if (command == "optctrl")
    headline = cmd_optctrl(sc, out);
  else if (command == "compare")
    headline = cmd_compare(sc, out, seed);
  else
    throw ScenarioError("$.command", "unknown command '" + command + "'");

  RunReport report;
  report.command = command;
  report.scenario_echo = root.dump(2);
  report.headline = headline.dump(2);
  report.outputs = out.written;
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.write("report.json", report.to_json());
  return report;
}

}  // namespace epinet
