#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <thread>

#include "fragmentor/errors.hpp"
#include "fragmentor/json_io.hpp"
#include "fragmentor/law.hpp"
#include "fragmentor/longtime.hpp"
#include "fragmentor/process.hpp"
#include "fragmentor/recomb.hpp"
#include "fragmentor/trees.hpp"

namespace fragmentor::cli {

namespace {

struct Common {
  std::string model_path;
  std::string output;
  std::size_t state_cap = kDefaultStateCap;
  unsigned threads = 1;
};

struct Loaded {
  SiteLabels labels;
  ProcessModel model;
};

unsigned default_threads() {
  if (const char* env = std::getenv("FRAGMENTOR_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 1024) {
      throw ValidationError("FRAGMENTOR_THREADS must be an integer in [1, 1024], got '" +
                            std::string(env) + "'");
    }
    return static_cast<unsigned>(v);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

Loaded load(const Common& common) {
  RateFamilyInput input = rate_family_from_json(read_json_file(common.model_path));
  ProcessModel model = closure(input.rates, common.state_cap);
  return Loaded{std::move(input.labels), std::move(model)};
}

Json header(const char* command) { return Json{{"version", kVersion}, {"command", command}}; }

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("--t must be a finite number >= 0");
}

Json state_list(const Loaded& in, const std::vector<std::size_t>& states) {
  Json out = Json::array();
  for (std::size_t s : states) out.push_back(in.labels.partition(in.model.state(s)));
  return out;
}

Json distribution_json(const Loaded& in, const std::vector<double>& p,
                       const std::vector<double>* se = nullptr) {
  Json out = Json::array();
  for (std::size_t j = 0; j < in.model.size(); ++j) {
    Json row{{"partition", in.labels.partition(in.model.state(j))}, {"p", p[j]}};
    if (se) row["se"] = (*se)[j];
    out.push_back(std::move(row));
  }
  return out;
}

Json cmd_closure(const Common& common) {
  const Loaded in = load(common);
  const ProcessModel& m = in.model;
  Json report = header("closure");
  report["model"] = rate_family_to_json(m.rates(), in.labels);
  report["size"] = m.size();
  Json states = Json::array();
  Json transitions = Json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    states.push_back(Json{{"index", i},
                          {"partition", in.labels.partition(m.state(i))},
                          {"exit_rate", m.exit_rate(i)},
                          {"lambda", lambda_partition(m.rates(), m.state(i))}});
    for (const Transition& tr : m.transitions(i)) {
      transitions.push_back(Json{{"from", i}, {"to", tr.target}, {"rate", tr.rate}});
    }
  }
  report["states"] = std::move(states);
  report["transitions"] = std::move(transitions);
  report["gamma_star"] = in.labels.partition(m.gamma_star());
  const GenericRatesCheck check = check_generic_rates(m);
  report["generic_rates"] = Json{{"passed", check.passed}, {"smallest_gap", check.smallest_gap}};
  return report;
}

struct LawArgs {
  double t = 0.0;
  std::string method = "formula";
  std::size_t n = 100000;
  std::uint64_t seed = 0;
  std::size_t tree_cap = kDefaultTreeCap;
};

Json cmd_law(const Common& common, const LawArgs& args) {
  require_time(args.t);
  const LawMethod method = parse_law_method(args.method);
  const Loaded in = load(common);
  LawReport law;
  switch (method) {
    case LawMethod::formula:
      law = law_distribution(in.model, args.t, LawOptions{args.tree_cap, common.threads});
      break;
    case LawMethod::semigroup:
      law = semigroup_distribution(in.model, args.t);
      break;
    case LawMethod::montecarlo:
      law = simulate(in.model, args.t, args.n, args.seed, SimulationOptions{common.threads, false}).report;
      break;
  }
  Json report = header("law");
  report["t"] = law.t;
  report["method"] = std::string(to_string(law.method));
  report["distribution"] = distribution_json(in, law.probabilities,
                                             law.std_errors.empty() ? nullptr : &law.std_errors);
  double total = 0.0;
  for (double p : law.probabilities) total += p;
  Json diag{{"total", total}};
  const LawDiagnostics& d = law.diagnostics;
  switch (method) {
    case LawMethod::formula:
      diag["tree_count"] = d.tree_count;
      diag["degenerate_trees"] = d.degenerate_trees;
      break;
    case LawMethod::semigroup:
      diag["uniformization_steps"] = d.uniformization_steps;
      diag["uniformization_terms"] = d.uniformization_terms;
      diag["truncation_bound"] = d.truncation_bound;
      break;
    case LawMethod::montecarlo:
      diag["replicates"] = d.replicates;
      diag["seed"] = d.seed;
      diag["rng"] = "splitmix64, one stream per replicate";
      break;
  }
  report["diagnostics"] = std::move(diag);
  return report;
}

struct TreesArgs {
  std::string target;
  bool count_only = false;
  std::optional<double> t;
  std::size_t tree_cap = kDefaultTreeCap;
};

Json cmd_trees(const Common& common, const TreesArgs& args) {
  const Loaded in = load(common);
  const SetPartition target = in.labels.partition_from(parse_json(args.target, "--target"));
  if (target.carrier() != in.model.universe()) {
    throw ValidationError("--target must partition all sites of the model");
  }
  if (!in.model.find(target)) {
    throw ValidationError("--target " + args.target + " is not a state of the closure");
  }
  Json report = header("trees");
  report["target"] = in.labels.partition(target);
  const std::size_t count = count_trees(in.model, target);
  report["count"] = count;
  if (args.count_only) return report;
  if (count > args.tree_cap) {
    throw ValidationError(std::to_string(count) + " trees exceed --tree-cap " +
                          std::to_string(args.tree_cap) +
                          "; use --count-only or `law --method semigroup`");
  }
  if (args.t) require_time(*args.t);
  Json trees = Json::array();
  for (const FragTree& tree : enumerate_trees(in.model, target, args.tree_cap)) {
    Json entry{{"canonical", canonical_form(tree)}, {"tree", tree_to_json(tree, in.labels)}};
    if (args.t) {
      const TreeLawTerm term = tree_law(in.model, tree, *args.t);
      entry["value"] = term.value;
      entry["degenerate"] = term.degenerate;
    }
    trees.push_back(std::move(entry));
  }
  report["trees"] = std::move(trees);
  return report;
}

struct SimulateArgs {
  double t = 0.0;
  std::size_t n = 100000;
  std::uint64_t seed = 0;
  std::size_t keep = 0;
  bool trees = false;
};

Json cmd_simulate(const Common& common, const SimulateArgs& args) {
  require_time(args.t);
  if (args.keep > args.n) throw ValidationError("--trajectories cannot exceed --n");
  const Loaded in = load(common);
  const SimulationResult sim =
      simulate(in.model, args.t, args.n, args.seed, SimulationOptions{common.threads, args.trees});
  Json report = header("simulate");
  report["t"] = args.t;
  report["replicates"] = args.n;
  report["seed"] = args.seed;
  report["distribution"] = distribution_json(in, sim.report.probabilities, &sim.report.std_errors);
  if (args.keep > 0) {
    Json paths = Json::array();
    for (std::size_t r = 0; r < args.keep; ++r) {
      const Trajectory path =
          args.trees ? sim.trajectories[r] : simulate_one(in.model, args.t, args.seed, r);
      paths.push_back(Json{{"replicate", r},
                           {"jump_times", path.jump_times},
                           {"states", state_list(in, path.states)}});
    }
    report["trajectories"] = std::move(paths);
  }
  if (args.trees) {
    std::map<std::string, std::pair<std::size_t, FragTree>> tally;
    for (const Trajectory& path : sim.trajectories) {
      FragTree tree = classify_trajectory(path, in.model);
      std::string key = canonical_form(tree);
      auto it = tally.find(key);
      if (it == tally.end()) {
        tally.emplace(std::move(key), std::make_pair(std::size_t{1}, std::move(tree)));
      } else {
        ++it->second.first;
      }
    }
    Json rows = Json::array();
    const double n = static_cast<double>(args.n);
    for (const auto& [key, entry] : tally) {
      const double f = static_cast<double>(entry.first) / n;
      rows.push_back(Json{{"canonical", key},
                          {"leaves", in.labels.partition(entry.second.leaves)},
                          {"count", entry.first},
                          {"frequency", f},
                          {"se", std::sqrt(f * (1.0 - f) / n)},
                          {"tree_law", tree_law(in.model, entry.second, args.t).value}});
    }
    report["trees"] = std::move(rows);
  }
  return report;
}

Json cmd_quasilimit(const Common& common, std::optional<double> t) {
  const Loaded in = load(common);
  const QuasiLimitReport ql = quasi_limit(in.model);
  Json report = header("quasilimit");
  report["delta_set"] = state_list(in, ql.delta_set);
  report["eta"] = ql.eta;
  report["V"] = state_list(in, ql.V);
  report["beta0"] = finite_or_null(ql.beta0);
  report["beta0_finite"] = std::isfinite(ql.beta0);
  Json transforms = Json::array();
  Json qld = Json::array();
  for (std::size_t k = 0; k < ql.V.size(); ++k) {
    const Json p = in.labels.partition(in.model.state(ql.V[k]));
    transforms.push_back(Json{{"partition", p}, {"value", ql.transforms[k]}});
    qld.push_back(Json{{"partition", p}, {"p", ql.qld[ql.V[k]]}});
  }
  report["transforms"] = std::move(transforms);
  report["normalizer"] = ql.normalizer;
  report["qld"] = std::move(qld);
  if (t) {
    require_time(*t);
    report["t"] = *t;
    report["scaled_survival"] = scaled_survival(in.model, ql.eta, *t);
    report["conditional"] = distribution_json(in, conditional_distribution(in.model, *t));
  }
  return report;
}

Json cmd_qprocess(const Common& common) {
  const Loaded in = load(common);
  const QProcess q = qprocess(in.model);
  Json report = header("qprocess");
  report["eta"] = q.eta;
  report["support"] = state_list(in, q.support);
  report["phi"] = q.phi;
  Json rows = Json::array();
  for (std::size_t i = 0; i < q.generator.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < q.generator.cols(); ++j) row.push_back(q.generator(i, j));
    rows.push_back(std::move(row));
  }
  report["generator"] = std::move(rows);
  report["checks"] = Json{{"max_row_sum", q.max_row_sum}, {"eigen_residual", q.eigen_residual}};
  return report;
}

struct SolveArgs {
  std::string mu_path;
  double t = 0.0;
  std::string method = "recsol";
  std::string law = "semigroup";
  double h = 1e-3;
  std::size_t tree_cap = kDefaultTreeCap;
};

Json cmd_solve(const Common& common, const SolveArgs& args) {
  require_time(args.t);
  const SolveMethod method = parse_solve_method(args.method);
  const LawMethod law = parse_law_method(args.law);
  const Loaded in = load(common);
  const Measure mu = measure_from_json(read_json_file(args.mu_path), in.labels);
  SolutionReport sol;
  switch (method) {
    case SolveMethod::recsol:
      sol = solve(in.model, mu, args.t, law, LawOptions{args.tree_cap, common.threads});
      break;
    case SolveMethod::ode:
      sol = ode_oracle(in.model, mu, args.t, args.h);
      break;
    case SolveMethod::approx:
      sol = approx_solution(in.model, mu, args.t);
      break;
  }
  Json report = header("solve");
  report["t"] = sol.t;
  report["method"] = std::string(to_string(sol.method));
  report["solution"] = measure_to_json(sol.solution, in.labels);
  const SolutionDiagnostics& d = sol.diagnostics;
  Json diag{{"mass_drift", d.mass_drift}};
  if (d.law_method) diag["law_method"] = std::string(to_string(*d.law_method));
  if (method == SolveMethod::ode) {
    diag["step"] = d.step;
    diag["steps"] = d.steps;
  }
  if (d.scaled_remainder) diag["scaled_remainder"] = *d.scaled_remainder;
  if (method == SolveMethod::approx) diag["below_burn_in"] = d.below_burn_in;
  report["diagnostics"] = std::move(diag);
  report["stationary"] = measure_to_json(stationary_measure(in.model, mu), in.labels);
  return report;
}

Json cmd_decay(const Common& common, double theta) {
  const Loaded in = load(common);
  const DecayCertificate cert = decay_certificate(in.model, theta);
  Json report = header("decay");
  report["theta"] = cert.theta;
  report["beta0"] = finite_or_null(cert.beta0);
  report["trivial"] = cert.trivial;
  if (cert.trivial) {
    report["note"] = cert.note;
    return report;
  }
  report["slope"] = cert.slope;
  report["slope_ok"] = cert.slope_ok;
  report["fitted_C"] = cert.fitted_C;
  report["monotone"] = cert.monotone;
  Json log_p = Json::array();
  for (double v : cert.log_probability) log_p.push_back(finite_or_null(v));
  report["grid"] = cert.grid;
  report["log_p"] = std::move(log_p);
  return report;
}

bool inline_array(const Json& j) {
  if (!j.is_array()) return false;
  for (const Json& x : j) {
    if (x.is_object()) return false;
    if (x.is_array()) {
      for (const Json& y : x) {
        if (y.is_structured() && !(y.is_array() && std::none_of(y.begin(), y.end(), [](const Json& z) {
                                     return z.is_structured();
                                   }))) {
          return false;
        }
      }
    }
  }
  return true;
}

/// Indented like dump(2), except that arrays of scalars (partitions,
/// matrix rows) stay on one line.
void format(const Json& j, int depth, std::string& out) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(2 * depth), ' ');
  if (j.is_object() && !j.empty()) {
    out += "{\n";
    bool first = true;
    for (const auto& [key, value] : j.items()) {
      if (!first) out += ",\n";
      first = false;
      out += pad + Json(key).dump() + ": ";
      format(value, depth + 1, out);
    }
    out += "\n" + close + "}";
  } else if (j.is_array() && !j.empty() && !inline_array(j)) {
    out += "[\n";
    for (std::size_t k = 0; k < j.size(); ++k) {
      if (k > 0) out += ",\n";
      out += pad;
      format(j[k], depth + 1, out);
    }
    out += "\n" + close + "]";
  } else {
    out += j.dump();
  }
}

void emit(const Json& report, const Common& common, std::ostream& out) {
  std::string text;
  format(report, 0, text);
  text += "\n";
  if (common.output.empty() || common.output == "-") {
    out << text;
    return;
  }
  std::ofstream file(common.output);
  if (!file) throw ValidationError("cannot write '" + common.output + "'");
  file << text;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Common common;
  try {
    common.threads = default_threads();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  CLI::App app{"Exact law, quasi-limits and recombination solutions of fragmentation processes",
               "fragmentor"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--model,-m", common.model_path, "Rate family JSON file")->check(CLI::ExistingFile);
  app.add_option("--output,-o", common.output, "Write the report here instead of stdout");
  app.add_option("--state-cap", common.state_cap, "Maximum closure size")
      ->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--threads", common.threads,
                 "Worker threads (default: $FRAGMENTOR_THREADS or the core count)")
      ->check(CLI::Range(1U, 1024U));

  auto* closure_cmd = app.add_subcommand("closure", "List the closure, its generator and gamma*");

  LawArgs law_args;
  auto* law_cmd = app.add_subcommand("law", "Distribution of X_t started from {I}");
  law_cmd->add_option("--t", law_args.t, "Time")->required();
  law_cmd->add_option("--method", law_args.method, "formula | semigroup | mc")->capture_default_str();
  law_cmd->add_option("--n", law_args.n, "Monte Carlo replicates")->capture_default_str()
      ->check(CLI::PositiveNumber);
  law_cmd->add_option("--seed", law_args.seed, "Monte Carlo seed")->capture_default_str();
  law_cmd->add_option("--tree-cap", law_args.tree_cap, "Maximum trees per target")->capture_default_str();

  TreesArgs trees_args;
  auto* trees_cmd = app.add_subcommand("trees", "Enumerate the fragmentation trees with given leaves");
  trees_cmd->add_option("--target", trees_args.target, "Leaves as a JSON partition literal")->required();
  trees_cmd->add_flag("--count-only", trees_args.count_only, "Only report the number of trees");
  trees_cmd->add_option("--t", trees_args.t, "Also evaluate each tree's law at this time");
  trees_cmd->add_option("--tree-cap", trees_args.tree_cap, "Maximum trees to materialize")
      ->capture_default_str();

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo jump-chain simulation");
  sim_cmd->add_option("--t", sim_args.t, "Time horizon")->required();
  sim_cmd->add_option("--n", sim_args.n, "Replicates")->capture_default_str()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim_args.seed, "Seed")->capture_default_str();
  sim_cmd->add_option("--trajectories", sim_args.keep, "Print the first K trajectories")
      ->capture_default_str();
  sim_cmd->add_flag("--trees", sim_args.trees, "Tabulate the fragmentation tree of every path");

  std::optional<double> ql_t;
  auto* ql_cmd = app.add_subcommand("quasilimit", "Decay rate, V and the quasi-limiting distribution");
  ql_cmd->add_option("--t", ql_t, "Also report the law conditioned on tau > t");

  auto* qp_cmd = app.add_subcommand("qprocess", "The Q-process: phi and the transformed generator");

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Solution of the recombination equation");
  solve_cmd->add_option("--mu", solve_args.mu_path, "Initial measure JSON file")->required()
      ->check(CLI::ExistingFile);
  solve_cmd->add_option("--t", solve_args.t, "Time")->required();
  solve_cmd->add_option("--method", solve_args.method, "recsol | ode | approx")->capture_default_str();
  solve_cmd->add_option("--law", solve_args.law, "Law used by recsol: formula | semigroup")
      ->capture_default_str();
  solve_cmd->add_option("--step", solve_args.h, "RK4 step h for --method ode")->capture_default_str();
  solve_cmd->add_option("--tree-cap", solve_args.tree_cap, "Maximum trees per target")
      ->capture_default_str();

  double theta = 0.1;
  auto* decay_cmd = app.add_subcommand("decay", "Certificate for the decay of P(X avoids V and gamma*)");
  decay_cmd->add_option("--theta", theta, "Rate margin theta > 0")->capture_default_str();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!argv_rev.empty()) argv_rev.pop_back();  // program name
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << " (see --help)\n";
    return 1;
  }

  try {
    if (common.model_path.empty()) throw ValidationError("--model is required");
    Json report;
    if (closure_cmd->parsed()) {
      report = cmd_closure(common);
    } else if (law_cmd->parsed()) {
      report = cmd_law(common, law_args);
    } else if (trees_cmd->parsed()) {
      report = cmd_trees(common, trees_args);
    } else if (sim_cmd->parsed()) {
      report = cmd_simulate(common, sim_args);
    } else if (ql_cmd->parsed()) {
      report = cmd_quasilimit(common, ql_t);
    } else if (qp_cmd->parsed()) {
      report = cmd_qprocess(common);
    } else if (solve_cmd->parsed()) {
      report = cmd_solve(common, solve_args);
    } else if (decay_cmd->parsed()) {
      report = cmd_decay(common, theta);
    }
    emit(report, common, out);
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConsistencyError& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace fragmentor::cli
