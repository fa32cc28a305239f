#include "fragmentor/exppoly.hpp"

#include <algorithm>
#include <cmath>

namespace fragmentor {

ExpPoly ExpPoly::exponential(double rate, double coeff, double rate_tolerance) {
  ExpPoly p(rate_tolerance);
  p.add({rate, 0, coeff});
  return p;
}

void ExpPoly::add(const Term& term) {
  if (term.coeff == 0.0) return;
  for (Term& t : terms_) {
    if (t.power == term.power && std::abs(t.rate - term.rate) <= tol_) {
      t.coeff += term.coeff;
      return;
    }
  }
  terms_.push_back(term);
}

ExpPoly ExpPoly::operator*(const ExpPoly& other) const {
  ExpPoly out(std::max(tol_, other.tol_));
  for (const Term& a : terms_) {
    for (const Term& b : other.terms_) {
      out.add({a.rate + b.rate, a.power + b.power, a.coeff * b.coeff});
    }
  }
  return out;
}

double ExpPoly::operator()(double t) const {
  double sum = 0.0;
  for (const Term& term : terms_) {
    sum += term.coeff * std::pow(t, term.power) * std::exp(-term.rate * t);
  }
  return sum;
}

ExpPoly ExpPoly::convolve_exponential(double rate, double coeff) const {
  ExpPoly out(tol_);
  for (const Term& term : terms_) {
    const int k = term.power;
    const double m = term.rate - rate;
    if (std::abs(m) <= tol_) {
      // ∫_0^s (s-u)^k du · e^{-r s}
      out.add({term.rate, k + 1, coeff * term.coeff / (k + 1)});
      continue;
    }
    // e^{-rate s} ∫_0^s v^k e^{-m v} dv
    //   = k!/m^{k+1} e^{-rate s} - Σ_j k!/(j! m^{k+1-j}) s^j e^{-term.rate s}
    double factorial_k = 1.0;
    for (int j = 2; j <= k; ++j) factorial_k *= j;
    const double scale = coeff * term.coeff;
    out.add({rate, 0, scale * factorial_k / std::pow(m, k + 1)});
    double factorial_j = 1.0;
    for (int j = 0; j <= k; ++j) {
      if (j > 0) factorial_j *= j;
      out.add({term.rate, j, -scale * factorial_k / (factorial_j * std::pow(m, k + 1 - j))});
    }
  }
  return out;
}

}  // namespace fragmentor
