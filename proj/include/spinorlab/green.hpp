#pragma once
#include "spinorlab/test_spinors.hpp"
#include <string>

namespace spinorlab {

struct GreenOptions {
  double sing_radius = 0.0; //!< <= 0 selects min(L)/4
  int sigma_levels = 4;     //!< sigma_max, sigma_max/2, ... ; Richardson in sigma
  double sigma_k2 = 20.0;   //!< sigma_min * k_nyquist^2
};

/*!
  Green function of D on the torus with pole at grid node p, split as
    omega_{n-1} G(x) psi = -(x-p)/|x-p|^n . psi + v(x) psi.
  Columns are stored per fiber basis vector. Inside sing_radius, v is taken
  from the heat-mollified sums
    v_sigma = omega_{n-1} G_sigma + (x-p)/r^n . P(n/2, r^2 / (4 sigma)),
  (P the regularized lower incomplete gamma) Richardson-extrapolated to
  sigma = 0; outside, v = omega_{n-1} G + (x-p)/r^n . from the raw table.
*/
struct GreenExpansion {
  GridSpec grid;
  std::vector<int> p;
  double sing_radius = 0.0;
  std::vector<double> sigma_schedule;
  std::vector<SpinorField> G;       //!< G(., p) e_a
  std::vector<SpinorField> v_field; //!< v(., p) e_a (carries the omega_{n-1} factor)
  Eigen::MatrixXcd alpha;           //!< from the even part of v on shells h, 2h, 3h
  Eigen::MatrixXcd alpha_at_pole;   //!< v(p, p) read directly, cross-check
};

GreenExpansion green_function(const DiracOperator &D, const std::vector<int> &p,
                              const GreenOptions &opts = {});

//! The mass endomorphism alpha_p (Hermitian part is not taken; check alpha - alpha^*).
Eigen::MatrixXcd mass_endomorphism(const GreenExpansion &exp);
double self_adjointness_defect(const Eigen::MatrixXcd &alpha);

/*!
  ||D(chi v)||_2 / ||chi v||_2 * sing_radius over B(p, sing_radius/2), chi a
  cutoff equal to 1 there and 0 past sing_radius; max over the columns.
*/
double harmonicity_defect(const DiracOperator &D, const GreenExpansion &exp);

struct MassSpinorParams {
  double eps = 0.0;
  Eigen::VectorXcd psi_p; //!< unit fiber vector, usually an eigenvector of alpha
  double xi(int n) const;
  double eps0(int n) const;
};

struct MassSpinor {
  SpinorField field;
  SpinorField dirac;     //!< D Phi assembled zone by zone
  std::vector<int> zone; //!< 0 inner, 1 interpolation, 2 outer
  double jump_inner = 0.0;
  double jump_outer = 0.0;
  double inner_formula_error = 0.0; //!< relative L2 of |D Phi|^{q_D} vs (n/2)^{q_D} eps^{-q_D} f^n
  double inner_formula_sup = 0.0;   //!< same, sup-norm relative to the zone maximum
  double outer_max = 0.0;           //!< max |D Phi| on the outer zone
  double theta_intercept = 0.0;     //!< |theta0| from theta ~ theta0 + x.B over r <= 2h
};

/*!
  Three-zone spinor with the common factor 2^{-1/2} of killing_value:
    r <= xi:        f(x/eps)^{n/2} (1 - x/eps) . psi_p + eps0 alpha psi_p
    xi < r < 2 xi:  eps0 (omega G psi_p - eta theta) + eta f(xi/eps)^{n/2} psi_p
    r >= 2 xi:      eps0 omega G psi_p
  theta = v psi_p - alpha psi_p, eta the cutoff on [xi, 2 xi]. D Phi is the
  spectral derivative of the Killing part inside, the closed form
  eta' x/r . (f(xi/eps)^{n/2} psi_p - eps0 theta) in between, and eps0 omega
  times the spectral D of the Green table outside.
*/
MassSpinor mass_test_spinor(const DiracOperator &D, const GreenExpansion &exp,
                            const MassSpinorParams &params);

//! F_{q_D} from the zone-assembled derivative.
double mass_functional(const MassSpinor &m, const ScalarField *H, int n);

struct ExistenceResult {
  std::vector<double> eps;
  std::vector<double> lambda_estimates; //!< F_{q_D}(Phi_eps)
  std::vector<double> ratios;           //!< value / bound
  double bound = 0.0;
  double alpha_max_eigenvalue = 0.0;
  double fitted_mass_coeff = 0.0;
  double predicted_coeff = 0.0; //!< -2^{n/2-1} lambda J / omega_n, the coefficient for this normalization
  double quoted_coeff = 0.0;    //!< -lambda J as usually written
  bool criterion_met = false;
  std::string explanation;
};

ExistenceResult existence_criterion(const DiracOperator &D, const ScalarField *H,
                                    const GreenExpansion &exp,
                                    const std::vector<double> &eps_sweep);

/*!
  Replaces alpha by a constant Hermitian matrix m and adds m e_a to every
  v column inside the singular chart. Constants are D-harmonic, so the result
  is a consistent expansion with mass m near p; flat tori have alpha = 0 and
  this is the only way to exercise the positive-mass branch on them.
*/
void inject_mass(GreenExpansion &exp, const Eigen::MatrixXcd &m);

/*!
  Least squares y = c eps^{n-1} + d eps^{n-1} xi, xi = eps^{1/(n+1)}; returns c.
  Mirrors value/bound - 1 = -lambda J eps^{n-1} + o(eps^{n-1}), where the
  measured remainder on flat tori is the gluing term of order eps^{n-1} xi.
*/
double fit_eps_coefficient(const std::vector<double> &eps, const std::vector<double> &y,
                           int n);

} // namespace spinorlab
