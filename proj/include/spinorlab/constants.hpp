#pragma once
#include "spinorlab/dirac.hpp"
#include <optional>
#include <vector>

namespace spinorlab {

//! Volume of the unit n-sphere, 2 pi^{(n+1)/2} / Gamma((n+1)/2).
double omega_n(int n);

struct SharpConstants {
  int n = 0;
  double omega = 0.0;
  std::optional<double> K2; //!< sharp Sobolev constant K(n,2), needs n >= 3
  double Kn = 0.0;          //!< (2/n) omega_n^{-1/n}
  double lam_sphere = 0.0;  //!< (n/2) omega_n^{1/n} = 1/Kn
  double lam_hemisphere = 0.0;
};

//! n >= 2; K2 is left empty for n = 2.
SharpConstants sharp_constants(int n);
//! Y(S^n) = 4(n-1)/(n-2) K(n,2)^{-2}
double yamabe_sphere(int n);
//! lam_sphere^2 - n/(4(n-1)) Y(S^n); zero on the round sphere.
double hijazi_sphere_gap(int n);

//! K(n)^{-1} (max H)^{-2/p_D}, the threshold of the non-triviality window.
double critical_bound(int n, double Hmax = 1.0);

struct ExponentPair {
  double q = 2.0;
  double p = 2.0;
  bool critical = false;

  static ExponentPair critical_for(int n);
  //! q in (1, 2]; critical flag set when q == 2n/(n+1) to 1e-14.
  static ExponentPair from_q(double q, int n);
  bool subcritical(int n) const;
};

//! ||H^{-1/p} D psi||_q^2 / |Re <D psi, psi>|; throws std::domain_error on a null pairing.
double functional_F(const DiracOperator &D, const SpinorField &psi,
                    const ScalarField *H, double q);
double functional_F(const SpinorField &Dpsi, const SpinorField &psi,
                    const ScalarField *H, double q);

//! ||D_gbar phi||_{q_D} / ||phi||_{p_D}, both with volume e^{nu} dx.
double conformal_quotient(const DiracOperator &D, const SpinorField &phi,
                          const ScalarField &u);

struct SobolevBudget {
  double lhs = 0.0;
  double dirac_term = 0.0;
  double mass_term = 0.0;
  double K = 0.0;
  double eps = 0.0;
  double B_eps = 0.0;
  double slack() const { return (K + eps) * dirac_term + B_eps * mass_term - lhs; }
};

SobolevBudget sobolev_budget(const DiracOperator &D, const SpinorField &phi,
                             double eps, double B_eps);

struct BudgetFit {
  double B_fit = 0.0; //!< max over the family of (lhs - (K+eps) dirac)/mass, unclamped
  double B_eps = 0.0; //!< max(B_fit, 0)
  int violations = 0; //!< samples with slack < -1e-12 (relative) at B_eps
  std::vector<SobolevBudget> samples;
};

BudgetFit fit_sobolev_budget(const DiracOperator &D,
                             const std::vector<SpinorField> &family, double eps);

enum class HalfNorm { printed, squared };

/*!
  printed:  sum_i |lambda_i|^{1/2} |A_i|^2
  squared: (sum_i |lambda_i| |A_i|^2)^{1/2}
  where psi = sum A_i psi_i over an L2-orthonormal eigenbasis. On the torus
  every eigenvalue in mode k has modulus |k|, so the sums run over modes.
*/
double spectral_half_norm(const DiracOperator &D, const SpinorField &psi,
                          HalfNorm mode = HalfNorm::printed);

} // namespace spinorlab
