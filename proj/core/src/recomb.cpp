#include "fragmentor/recomb.hpp"

#include <cmath>
#include <string>

#include "fragmentor/errors.hpp"
#include "fragmentor/longtime.hpp"

namespace fragmentor {

namespace {

std::vector<int> sites_of(SiteMask mask) {
  std::vector<int> out;
  for (SiteMask m = mask; m != 0; m &= m - 1) out.push_back(lowest_site(m));
  return out;
}

std::vector<std::size_t> strides_of(const AlphabetSpec& spec) {
  std::vector<std::size_t> s(spec.sizes.size(), 1);
  for (std::size_t k = spec.sizes.size(); k-- > 1;) {
    s[k - 1] = s[k] * static_cast<std::size_t>(spec.sizes[k]);
  }
  return s;
}

void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("time t must be finite and >= 0");
}

void axpy(double a, const Measure& x, std::vector<double>& y) {
  if (a == 0.0) return;
  const auto w = x.weights();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * w[i];
}

double mass_drift(const Measure& m) { return std::abs(m.mass() - 1.0); }

}  // namespace

AlphabetSpec AlphabetSpec::create(SiteMask carrier, std::vector<int> sizes) {
  if (sizes.size() != static_cast<std::size_t>(site_count(carrier))) {
    throw ValidationError("alphabet: one size per carrier site is required");
  }
  std::size_t total = 1;
  for (int s : sizes) {
    if (s < 2) throw ValidationError("alphabet: every site needs at least 2 letters");
    total *= static_cast<std::size_t>(s);
    if (total > kMaxMeasureStates) {
      throw ValidationError("alphabet: more than " + std::to_string(kMaxMeasureStates) +
                            " joint states");
    }
  }
  return AlphabetSpec{carrier, std::move(sizes)};
}

std::size_t AlphabetSpec::states() const {
  std::size_t total = 1;
  for (int s : sizes) total *= static_cast<std::size_t>(s);
  return total;
}

int AlphabetSpec::size_of(int site) const {
  if (site < 0 || site >= kMaxSites || !(carrier & site_bit(site))) {
    throw ValidationError("alphabet: site " + std::to_string(site) + " is not in the carrier");
  }
  return sizes[static_cast<std::size_t>(site_count(carrier & (site_bit(site) - 1)))];
}

AlphabetSpec AlphabetSpec::restrict_to(SiteMask subset) const {
  if ((subset & ~carrier) != 0) throw ValidationError("alphabet: subset outside the carrier");
  std::vector<int> out;
  for (int site : sites_of(subset)) out.push_back(size_of(site));
  return AlphabetSpec{subset, std::move(out)};
}

Measure::Measure(AlphabetSpec spec, std::vector<double> weights)
    : spec_(std::move(spec)), weights_(std::move(weights)) {
  if (weights_.size() != spec_.states()) {
    throw ValidationError("measure: expected " + std::to_string(spec_.states()) + " weights, got " +
                          std::to_string(weights_.size()));
  }
}

Measure Measure::probability(AlphabetSpec spec, std::vector<double> weights) {
  Measure m(std::move(spec), std::move(weights));
  for (double w : m.weights_) {
    if (!std::isfinite(w) || w < -1e-12) throw ValidationError("measure: weights must be >= 0");
  }
  if (std::abs(m.mass() - 1.0) > 1e-9) {
    throw ValidationError("measure: weights must sum to 1 (got " + std::to_string(m.mass()) + ")");
  }
  return m;
}

Measure Measure::uniform(AlphabetSpec spec) {
  const std::size_t n = spec.states();
  return Measure(std::move(spec), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

double Measure::mass() const {
  double s = 0.0;
  for (double w : weights_) s += w;
  return s;
}

double Measure::min_weight() const {
  double m = weights_.front();
  for (double w : weights_) m = std::min(m, w);
  return m;
}

Measure marginal(const Measure& mu, SiteMask subset) {
  const AlphabetSpec& spec = mu.spec();
  AlphabetSpec out_spec = spec.restrict_to(subset);
  if (subset == spec.carrier) return mu;
  const auto sites = sites_of(spec.carrier);
  const auto out_strides = strides_of(out_spec);
  std::vector<std::size_t> stride(sites.size(), 0);
  for (std::size_t k = 0, j = 0; k < sites.size(); ++k) {
    if (subset & site_bit(sites[k])) stride[k] = out_strides[j++];
  }
  std::vector<double> out(out_spec.states(), 0.0);
  std::vector<int> digit(sites.size(), 0);
  std::size_t pos = 0;
  const auto w = mu.weights();
  for (std::size_t flat = 0; flat < w.size(); ++flat) {
    out[pos] += w[flat];
    for (std::size_t k = sites.size(); k-- > 0;) {
      pos += stride[k];
      if (++digit[k] < spec.sizes[k]) break;
      pos -= stride[k] * static_cast<std::size_t>(spec.sizes[k]);
      digit[k] = 0;
    }
  }
  return Measure(std::move(out_spec), std::move(out));
}

Measure product(std::span<const Measure> parts) {
  SiteMask carrier = 0;
  for (const Measure& p : parts) {
    if (carrier & p.carrier()) throw ValidationError("product: carriers overlap");
    carrier |= p.carrier();
  }
  if (parts.size() == 1) return parts.front();
  std::vector<int> sizes;
  const auto sites = sites_of(carrier);
  std::vector<std::size_t> owner(sites.size());
  std::vector<std::size_t> stride(sites.size());
  std::vector<std::vector<std::size_t>> part_strides;
  for (const Measure& p : parts) part_strides.push_back(strides_of(p.spec()));
  for (std::size_t k = 0; k < sites.size(); ++k) {
    for (std::size_t q = 0; q < parts.size(); ++q) {
      const SiteMask c = parts[q].carrier();
      if (c & site_bit(sites[k])) {
        owner[k] = q;
        stride[k] = part_strides[q][static_cast<std::size_t>(site_count(c & (site_bit(sites[k]) - 1)))];
        sizes.push_back(parts[q].spec().size_of(sites[k]));
      }
    }
  }
  AlphabetSpec spec = AlphabetSpec::create(carrier, sizes);
  std::vector<double> out(spec.states());
  std::vector<std::size_t> offset(parts.size(), 0);
  std::vector<int> digit(sites.size(), 0);
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    double w = 1.0;
    for (std::size_t q = 0; q < parts.size(); ++q) w *= parts[q].weights()[offset[q]];
    out[flat] = w;
    for (std::size_t k = sites.size(); k-- > 0;) {
      offset[owner[k]] += stride[k];
      if (++digit[k] < sizes[k]) break;
      offset[owner[k]] -= stride[k] * static_cast<std::size_t>(sizes[k]);
      digit[k] = 0;
    }
  }
  return Measure(std::move(spec), std::move(out));
}

Measure product(const Measure& a, const Measure& b) {
  const Measure parts[] = {a, b};
  return product(parts);
}

Measure recombine(const Measure& mu, const SetPartition& p) {
  if (p.carrier() != mu.carrier()) throw ValidationError("recombine: partition and measure carriers differ");
  if (p.is_trivial()) return mu;
  std::vector<Measure> parts;
  parts.reserve(p.size());
  for (SiteMask a : p.atoms()) parts.push_back(marginal(mu, a));
  return product(parts);
}

double tv_norm(const Measure& mu, const Measure& nu) {
  if (!(mu.spec() == nu.spec())) throw ValidationError("tv_norm: measures live on different spaces");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.weights().size(); ++i) s += std::abs(mu.weights()[i] - nu.weights()[i]);
  return s;
}

std::string_view to_string(SolveMethod method) {
  switch (method) {
    case SolveMethod::recsol:
      return "recsol";
    case SolveMethod::ode:
      return "ode";
    case SolveMethod::approx:
      return "approx";
  }
  return "unknown";
}

SolveMethod parse_solve_method(std::string_view name) {
  if (name == "recsol") return SolveMethod::recsol;
  if (name == "ode") return SolveMethod::ode;
  if (name == "approx") return SolveMethod::approx;
  throw ValidationError("unknown solve method '" + std::string(name) +
                        "' (expected recsol, ode or approx)");
}

SolutionReport solve(const ProcessModel& model, const Measure& mu, double t, LawMethod law_method,
                     const LawOptions& options) {
  require_time(t);
  if (mu.carrier() != model.universe()) throw ValidationError("solve: measure and model sites differ");
  LawReport law;
  switch (law_method) {
    case LawMethod::formula:
      law = law_distribution(model, t, options);
      break;
    case LawMethod::semigroup:
      law = semigroup_distribution(model, t);
      break;
    case LawMethod::montecarlo:
      throw ValidationError("solve: the law must come from the formula or semigroup method");
  }
  std::vector<double> out(mu.weights().size(), 0.0);
  for (std::size_t j = 0; j < model.size(); ++j) {
    if (law.probabilities[j] != 0.0) axpy(law.probabilities[j], recombine(mu, model.state(j)), out);
  }
  SolutionReport report{t, Measure(mu.spec(), std::move(out)), SolveMethod::recsol, {}};
  report.diagnostics.law_method = law_method;
  report.diagnostics.mass_drift = mass_drift(report.solution);
  return report;
}

SolutionReport ode_oracle(const ProcessModel& model, const Measure& mu, double t, double h) {
  require_time(t);
  if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("ode: step h must be finite and > 0");
  if (mu.carrier() != model.universe()) throw ValidationError("ode: measure and model sites differ");
  const auto entries = model.rates().entries();
  const double total = model.rates().total();
  // R_δ off the simplex: ⊗ w_L / |w|^{|δ|-1}
  auto rhs = [&](const Measure& w) {
    std::vector<double> d(w.weights().size(), 0.0);
    axpy(-total, w, d);
    const double m = w.mass();
    for (const RateEntry& e : entries) {
      const double scale = std::pow(m, 1.0 - static_cast<double>(e.partition.size()));
      axpy(e.rate * scale, recombine(w, e.partition), d);
    }
    return d;
  };
  const auto steps = t == 0.0 ? std::size_t{0} : static_cast<std::size_t>(std::ceil(t / h));
  const double dt = steps == 0 ? 0.0 : t / static_cast<double>(steps);
  Measure w = mu;
  const std::size_t n = w.weights().size();
  auto shifted = [&](const std::vector<double>& k, double a) {
    std::vector<double> v(w.weights().begin(), w.weights().end());
    for (std::size_t i = 0; i < n; ++i) v[i] += a * k[i];
    return Measure(w.spec(), std::move(v));
  };
  for (std::size_t s = 0; s < steps; ++s) {
    const auto k1 = rhs(w);
    const auto k2 = rhs(shifted(k1, dt / 2));
    const auto k3 = rhs(shifted(k2, dt / 2));
    const auto k4 = rhs(shifted(k3, dt));
    auto& v = w.mutable_weights();
    for (std::size_t i = 0; i < n; ++i) v[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  SolutionReport report{t, std::move(w), SolveMethod::ode, {}};
  report.diagnostics.step = dt;
  report.diagnostics.steps = steps;
  report.diagnostics.mass_drift = mass_drift(report.solution);
  return report;
}

Measure stationary_measure(const ProcessModel& model, const Measure& mu) {
  return recombine(mu, model.gamma_star());
}

SolutionReport approx_solution(const ProcessModel& model, const Measure& mu, double t) {
  require_time(t);
  if (mu.carrier() != model.universe()) throw ValidationError("approx: measure and model sites differ");
  const QuasiLimitReport ql = quasi_limit(model);
  const Measure bar = stationary_measure(model, mu);
  std::vector<double> out(bar.weights().begin(), bar.weights().end());
  const double decay = std::exp(-ql.eta * t);
  for (std::size_t k = 0; k < ql.V.size(); ++k) {
    const double c = decay * ql.transforms[k];
    axpy(c, recombine(mu, model.state(ql.V[k])), out);
    axpy(-c, bar, out);
  }
  SolutionReport report{t, Measure(mu.spec(), std::move(out)), SolveMethod::approx, {}};
  report.diagnostics.mass_drift = mass_drift(report.solution);
  report.diagnostics.below_burn_in = t * (ql.beta0 - ql.eta) < 3.0;
  report.diagnostics.scaled_remainder = scaled_approx_remainder(model, mu, t);
  return report;
}

double scaled_approx_remainder(const ProcessModel& model, const Measure& mu, double t) {
  require_time(t);
  const QuasiLimitReport ql = quasi_limit(model);
  const Measure bar = stationary_measure(model, mu);
  const std::vector<double> scaled = scaled_transient_law(model, ProcessModel::start(), ql.eta, t);
  // e^{ηt}(Ξ_tμ − approx) = Σ_δ S_δ R_δμ − (Σ_δ S_δ) μ̄ + N μ̄ − Σ_{δ∈𝒱} h_δ R_δμ,
  // where S_δ = e^{ηt} P(X_t = δ) over transient δ.
  std::vector<double> w(mu.weights().size(), 0.0);
  double survival = 0.0;
  std::vector<double> coeff(scaled);
  for (std::size_t k = 0; k < ql.V.size(); ++k) coeff[ql.V[k]] -= ql.transforms[k];
  for (std::size_t j = 0; j < model.absorbing(); ++j) {
    survival += scaled[j];
    if (coeff[j] != 0.0) axpy(coeff[j], recombine(mu, model.state(j)), w);
  }
  axpy(ql.normalizer - survival, bar, w);
  double s = 0.0;
  for (double x : w) s += std::abs(x);
  return s;
}

}  // namespace fragmentor
