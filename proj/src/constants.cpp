#include "spinorlab/constants.hpp"
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spinorlab {

double omega_n(int n) {
  if (n < 0)
    throw std::invalid_argument("omega_n: n >= 0 required");
  const double h = 0.5 * (n + 1);
  return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

SharpConstants sharp_constants(int n) {
  if (n < 2)
    throw std::invalid_argument("sharp_constants: n >= 2 required");
  SharpConstants c;
  c.n = n;
  c.omega = omega_n(n);
  if (n >= 3)
    c.K2 = std::sqrt(4.0 / (n * (n - 2.0) * std::pow(c.omega, 2.0 / n)));
  c.Kn = (2.0 / n) * std::pow(c.omega, -1.0 / n);
  c.lam_sphere = 0.5 * n * std::pow(c.omega, 1.0 / n);
  c.lam_hemisphere = std::pow(2.0, -1.0 / n) * c.lam_sphere;
  return c;
}

double yamabe_sphere(int n) {
  const auto c = sharp_constants(n);
  if (!c.K2)
    throw std::invalid_argument("yamabe_sphere: n >= 3 required");
  return 4.0 * (n - 1.0) / (n - 2.0) / (*c.K2 * *c.K2);
}

double hijazi_sphere_gap(int n) {
  const auto c = sharp_constants(n);
  return c.lam_sphere * c.lam_sphere - n / (4.0 * (n - 1.0)) * yamabe_sphere(n);
}

ExponentPair ExponentPair::critical_for(int n) {
  ExponentPair e;
  e.q = 2.0 * n / (n + 1.0);
  e.p = n > 1 ? 2.0 * n / (n - 1.0) : INFINITY;
  e.critical = true;
  return e;
}

ExponentPair ExponentPair::from_q(double q, int n) {
  if (!(q > 1.0 && q <= 2.0))
    throw std::invalid_argument("ExponentPair: q must lie in (1, 2]");
  ExponentPair e;
  e.q = q;
  e.p = q / (q - 1.0);
  e.critical = std::abs(q - 2.0 * n / (n + 1.0)) < 1e-14;
  return e;
}

bool ExponentPair::subcritical(int n) const {
  return q > 2.0 * n / (n + 1.0) && q < 2.0;
}

double critical_bound(int n, double Hmax) {
  const auto e = ExponentPair::critical_for(n);
  return sharp_constants(n).lam_sphere * std::pow(Hmax, -2.0 / e.p);
}

double functional_F(const SpinorField &Dpsi, const SpinorField &psi,
                    const ScalarField *H, double q) {
  const double p = q / (q - 1.0);
  double num;
  if (H) {
    ScalarField w(H->grid);
    for (std::size_t i = 0; i < w.values.size(); ++i)
      w.values[i] = std::pow(H->values[i], -q / p);
    num = lp_norm(Dpsi, q, &w);
  } else {
    num = lp_norm(Dpsi, q);
  }
  const double den = std::abs(pairing(Dpsi, psi).real());
  const double scale = lp_norm(Dpsi, 2) * lp_norm(psi, 2);
  if (!(den > 1e-13 * scale))
    throw std::domain_error("functional_F: null pairing");
  return num * num / den;
}

double functional_F(const DiracOperator &D, const SpinorField &psi,
                    const ScalarField *H, double q) {
  return functional_F(D.apply(psi), psi, H, q);
}

double conformal_quotient(const DiracOperator &D, const SpinorField &phi,
                          const ScalarField &u) {
  const int n = D.n();
  const auto e = ExponentPair::critical_for(n);
  ScalarField vol(u.grid);
  for (std::size_t i = 0; i < vol.values.size(); ++i)
    vol.values[i] = std::exp(n * u.values[i]);
  const double den = lp_norm(phi, e.p, &vol);
  if (!(den > 0.0))
    throw std::domain_error("conformal_quotient: zero field");
  return lp_norm(conformal_dirac_apply(D, phi, u), e.q, &vol) / den;
}

SobolevBudget sobolev_budget(const DiracOperator &D, const SpinorField &phi,
                             double eps, double B_eps) {
  if (!(eps > 0.0) || B_eps < 0.0)
    throw std::invalid_argument("sobolev_budget: need eps > 0, B_eps >= 0");
  const int n = D.n();
  const double qD = ExponentPair::critical_for(n).q;
  SobolevBudget b;
  const SpinorField Dphi = D.apply(phi);
  b.lhs = std::abs(pairing(Dphi, phi).real());
  const double dq = lp_norm(Dphi, qD), mq = lp_norm(phi, qD);
  b.dirac_term = dq * dq;
  b.mass_term = mq * mq;
  b.K = sharp_constants(n).Kn;
  b.eps = eps;
  b.B_eps = B_eps;
  return b;
}

BudgetFit fit_sobolev_budget(const DiracOperator &D,
                             const std::vector<SpinorField> &family, double eps) {
  BudgetFit fit;
  fit.B_fit = -INFINITY;
  for (const auto &phi : family) {
    auto b = sobolev_budget(D, phi, eps, 0.0);
    if (b.mass_term > 0.0)
      fit.B_fit = std::max(fit.B_fit, (b.lhs - (b.K + eps) * b.dirac_term) / b.mass_term);
    fit.samples.push_back(b);
  }
  fit.B_eps = std::max(fit.B_fit, 0.0);
  for (auto &b : fit.samples) {
    b.B_eps = fit.B_eps;
    if (b.slack() < -1e-12 * std::max(1.0, b.lhs))
      ++fit.violations;
  }
  return fit;
}

double spectral_half_norm(const DiracOperator &D, const SpinorField &psi,
                          HalfNorm mode) {
  if (!D.invertible())
    throw std::domain_error("spectral_half_norm: Dirac operator has a zero mode");
  const auto c = D.coefficients(psi);
  const int d = psi.fiber;
  const double V = psi.grid.volume();
  double s = 0.0;
  for (std::size_t m = 0; m < psi.points(); ++m) {
    double a2 = 0.0;
    for (int j = 0; j < d; ++j)
      a2 += std::norm(c[m * d + j]);
    const double kabs = D.mode_abs_k(m);
    s += (mode == HalfNorm::printed ? std::sqrt(kabs) : kabs) * V * a2;
  }
  return mode == HalfNorm::printed ? s : std::sqrt(s);
}

} // namespace spinorlab
