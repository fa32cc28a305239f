#pragma once

#include <vector>

namespace fragmentor {

/// Finite sum of terms c · t^k · exp(-r t). Rates closer than `rate_tolerance`
/// are treated as equal, which is what lets convolutions of coinciding rates
/// produce the polynomial factors.
class ExpPoly {
 public:
  struct Term {
    double rate = 0.0;
    int power = 0;
    double coeff = 0.0;
  };

  explicit ExpPoly(double rate_tolerance = 1e-12) : tol_(rate_tolerance) {}

  static ExpPoly exponential(double rate, double coeff, double rate_tolerance);

  const std::vector<Term>& terms() const { return terms_; }
  double rate_tolerance() const { return tol_; }

  void add(const Term& term);
  ExpPoly operator*(const ExpPoly& other) const;
  double operator()(double t) const;

  /// s ↦ ∫_0^s coeff · e^{-rate·u} · f(s-u) du, in closed form.
  ExpPoly convolve_exponential(double rate, double coeff) const;

 private:
  double tol_;
  std::vector<Term> terms_;
};

}  // namespace fragmentor
