#include "fragmentor/longtime.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fragmentor/errors.hpp"
#include "fragmentor/semigroup.hpp"

namespace fragmentor {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<char> membership(std::size_t n, const std::vector<std::size_t>& states) {
  std::vector<char> in(n, 0);
  for (std::size_t s : states) in.at(s) = 1;
  return in;
}

/// States that can reach `targets` (targets included), decided on the DAG.
std::vector<char> can_reach(const ProcessModel& model, const std::vector<char>& target) {
  std::vector<char> reach(model.size(), 0);
  for (std::size_t x = model.size(); x-- > 0;) {
    if (target[x]) {
      reach[x] = 1;
      continue;
    }
    for (const Transition& tr : model.transitions(x)) {
      if (reach[tr.target]) {
        reach[x] = 1;
        break;
      }
    }
  }
  return reach;
}

std::vector<std::size_t> transient_states(const ProcessModel& model) {
  std::vector<std::size_t> out(model.size() - 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("time t must be finite and >= 0");
}

}  // namespace

std::vector<double> hitting_transform(const ProcessModel& model,
                                      const std::vector<std::size_t>& targets, double eta) {
  const auto is_target = membership(model.size(), targets);
  const auto reach = can_reach(model, is_target);
  std::vector<double> h(model.size(), 0.0);
  for (std::size_t x = model.size(); x-- > 0;) {
    if (is_target[x]) {
      h[x] = 1.0;
      continue;
    }
    if (!reach[x]) continue;
    const double denom = model.exit_rate(x) - eta;
    if (!(denom > 0.0)) {
      throw ConsistencyError("hitting transform: exit rate of " + model.state(x).to_string() +
                             " does not exceed eta on a path to the target set");
    }
    double s = 0.0;
    for (const Transition& tr : model.transitions(x)) s += tr.rate * h[tr.target];
    h[x] = s / denom;
  }
  return h;
}

QuasiLimitReport quasi_limit(const ProcessModel& model) {
  QuasiLimitReport report;
  const std::size_t absorbing = model.absorbing();
  for (std::size_t x = 0; x < absorbing; ++x) {
    if (model.generator(x, absorbing) > 0.0) report.delta_set.push_back(x);
  }
  if (report.delta_set.empty()) throw ConsistencyError("quasi_limit: no state fragments into gamma*");
  report.eta = kInf;
  for (std::size_t x : report.delta_set) report.eta = std::min(report.eta, model.exit_rate(x));
  for (std::size_t x : report.delta_set) {
    if (model.exit_rate(x) == report.eta) report.V.push_back(x);
  }
  const auto in_v = membership(model.size(), report.V);
  report.beta0 = kInf;
  for (std::size_t x = 0; x < absorbing; ++x) {
    if (!in_v[x]) report.beta0 = std::min(report.beta0, model.exit_rate(x));
  }
  if (!(report.eta < report.beta0)) {
    throw ConsistencyError("quasi_limit: eta is not below beta0");
  }
  for (std::size_t v : report.V) {
    if (std::abs(model.exit_rate(v) - model.generator(v, absorbing)) > 1e-12 * model.rates().total()) {
      throw ConsistencyError("quasi_limit: state " + model.state(v).to_string() +
                             " in V has transitions other than into gamma*");
    }
    report.transforms.push_back(hitting_transform(model, {v}, report.eta)[ProcessModel::start()]);
  }
  for (double h : report.transforms) report.normalizer += h;
  if (!(report.normalizer > 0.0) || !std::isfinite(report.normalizer)) {
    throw ConsistencyError("quasi_limit: normalizer is not positive and finite");
  }
  report.qld.assign(model.size(), 0.0);
  for (std::size_t k = 0; k < report.V.size(); ++k) {
    report.qld[report.V[k]] = report.transforms[k] / report.normalizer;
  }
  return report;
}

std::vector<double> scaled_transient_law(const ProcessModel& model, std::size_t from, double eta,
                                         double t) {
  require_time(t);
  std::vector<double> out(model.size(), 0.0);
  if (from >= model.absorbing()) return out;
  const SubGenerator gen = SubGenerator::restricted(model, transient_states(model));
  std::vector<double> v(gen.size(), 0.0);
  v[from] = 1.0;
  const ScaledVector s = propagate_scaled(gen, v, t);
  const double shift = s.log_scale + eta * t;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    out[i] = s.values[i] == 0.0 ? 0.0 : s.values[i] * std::exp(shift);
  }
  return out;
}

double scaled_survival(const ProcessModel& model, double eta, double t) {
  require_time(t);
  const SubGenerator gen = SubGenerator::restricted(model, transient_states(model));
  std::vector<double> v(gen.size(), 0.0);
  v[ProcessModel::start()] = 1.0;
  const ScaledVector s = propagate_scaled(gen, v, t);
  const double log_mass = s.log_sum();
  return std::isfinite(log_mass) ? std::exp(log_mass + eta * t) : 0.0;
}

std::vector<double> conditional_distribution(const ProcessModel& model, double t) {
  require_time(t);
  const SubGenerator gen = SubGenerator::restricted(model, transient_states(model));
  std::vector<double> v(gen.size(), 0.0);
  v[ProcessModel::start()] = 1.0;
  const ScaledVector s = propagate_scaled(gen, v, t);
  double mass = 0.0;
  for (double x : s.values) mass += x;
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw ValidationError("conditional distribution: P(tau > t) is zero at working precision; lower t");
  }
  std::vector<double> out(model.size(), 0.0);
  for (std::size_t i = 0; i < gen.size(); ++i) out[i] = s.values[i] / mass;
  return out;
}

DecayCertificate decay_certificate(const ProcessModel& model, double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw ValidationError("theta must be finite and > 0");
  const QuasiLimitReport ql = quasi_limit(model);
  DecayCertificate cert;
  cert.theta = theta;
  cert.beta0 = ql.beta0;
  const auto in_v = membership(model.size(), ql.V);
  std::vector<std::size_t> avoid;
  for (std::size_t x = 0; x < model.absorbing(); ++x) {
    if (!in_v[x]) avoid.push_back(x);
  }
  if (avoid.empty() || in_v[ProcessModel::start()]) {
    cert.trivial = true;
    cert.note = avoid.empty() ? "U is empty: every state lies in V or is gamma*"
                              : "{I} lies in V: the avoided-set probability is 0";
    cert.slope_ok = true;
    return cert;
  }

  const double tol = 1e-9 * model.rates().total();
  double gap = kInf;
  for (std::size_t x : avoid) {
    const double d = model.exit_rate(x) - ql.beta0;
    if (d > tol) gap = std::min(gap, d);
  }
  if (!std::isfinite(gap)) gap = ql.beta0;
  const double horizon = std::max(10.0 / ql.beta0, std::min(40.0 / gap, 4000.0 / ql.beta0));

  const SubGenerator gen = SubGenerator::restricted(model, avoid);
  constexpr std::size_t kPoints = 401;
  std::vector<double> v(gen.size(), 0.0);
  v[*gen.local_index(ProcessModel::start())] = 1.0;
  ScaledVector state{v, 0.0};
  const double log_base = std::log(std::exp(-ql.beta0) + theta);
  double log_c = -kInf;
  for (std::size_t k = 0; k < kPoints; ++k) {
    const double t = horizon * static_cast<double>(k) / static_cast<double>(kPoints - 1);
    if (k > 0) {
      const double dt = t - cert.grid.back();
      ScaledVector next = propagate_scaled(gen, state.values, dt);
      next.log_scale += state.log_scale;
      state = std::move(next);
    }
    const double lp = state.log_sum();
    if (!cert.log_probability.empty() && lp > cert.log_probability.back() + 1e-12) {
      cert.monotone = false;
    }
    cert.grid.push_back(t);
    cert.log_probability.push_back(lp);
    log_c = std::max(log_c, lp - t * log_base);
  }
  cert.fitted_C = std::exp(log_c);

  // Least-squares slope over the last quarter of the grid.
  const std::size_t first = (3 * kPoints) / 4;
  double mt = 0.0;
  double ml = 0.0;
  const double count = static_cast<double>(kPoints - first);
  for (std::size_t k = first; k < kPoints; ++k) {
    mt += cert.grid[k];
    ml += cert.log_probability[k];
  }
  mt /= count;
  ml /= count;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = first; k < kPoints; ++k) {
    sxy += (cert.grid[k] - mt) * (cert.log_probability[k] - ml);
    sxx += (cert.grid[k] - mt) * (cert.grid[k] - mt);
  }
  cert.slope = sxy / sxx;
  cert.slope_ok = cert.slope <= -ql.beta0 + 1e-6 * std::max(1.0, ql.beta0);
  return cert;
}

QProcess qprocess(const ProcessModel& model) {
  const QuasiLimitReport ql = quasi_limit(model);
  const std::vector<double> phi_all = hitting_transform(model, ql.V, ql.eta);
  QProcess q;
  q.eta = ql.eta;
  const auto reach = can_reach(model, membership(model.size(), ql.V));
  for (std::size_t x = 0; x < model.size(); ++x) {
    if (reach[x]) q.support.push_back(x);
  }
  if (q.support.empty()) throw ConsistencyError("qprocess: the support of the Q-process is empty");
  for (std::size_t x : q.support) {
    if (!(phi_all[x] > 0.0)) throw ConsistencyError("qprocess: phi vanishes on its support");
    q.phi.push_back(phi_all[x]);
  }
  const SubGenerator gen = SubGenerator::restricted(model, q.support);
  q.generator = Matrix(q.support.size(), q.support.size());
  for (std::size_t i = 0; i < q.support.size(); ++i) {
    const std::size_t x = q.support[i];
    q.generator(i, i) = ql.eta - model.exit_rate(x);
    for (const Transition& tr : model.transitions(x)) {
      if (auto j = gen.local_index(tr.target)) q.generator(i, *j) = tr.rate * q.phi[*j] / q.phi[i];
    }
    double row = 0.0;
    for (std::size_t j = 0; j < q.support.size(); ++j) row += q.generator(i, j);
    q.max_row_sum = std::max(q.max_row_sum, std::abs(row));
  }

  // P^t φ = e^{-ηt} φ on the support
  for (double t : {0.5, 1.0}) {
    const Matrix p = semigroup_matrix(gen, t);
    for (std::size_t i = 0; i < q.support.size(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < q.support.size(); ++j) s += p(i, j) * q.phi[j];
      const double r = std::abs(s - std::exp(-ql.eta * t) * q.phi[i]) / std::max(1.0, q.phi[i]);
      q.eigen_residual = std::max(q.eigen_residual, r);
    }
  }
  if (q.eigen_residual > 1e-8) {
    throw ConsistencyError("qprocess: phi fails the eigenvector check (residual " +
                           std::to_string(q.eigen_residual) + ")");
  }
  if (q.max_row_sum > 1e-9 * std::max(1.0, model.rates().total())) {
    throw ConsistencyError("qprocess: generator rows do not sum to zero");
  }
  return q;
}

}  // namespace fragmentor
