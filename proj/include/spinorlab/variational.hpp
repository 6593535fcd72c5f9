#pragma once
#include "spinorlab/constants.hpp"
#include <cstdint>
#include <optional>
#include <string>

namespace spinorlab {

struct SolverOptions {
  double tolerance = 1e-6;    //!< on the Euler-Lagrange residual and the constraint defect
  int max_iter = 20000;       //!< total gradient steps over all stages
  int stage_iter = 400;       //!< cap per regularized stage
  std::vector<double> mu_schedule = {1e-2, 2.5e-3, 6.25e-4, 1.5625e-4, 3.90625e-5};
  bool warm_start = true;
  double init_perturbation = 0.5; //!< relative amplitude of the bump added to the eigen start
  int check_every = 10;
};

struct SolutionReport {
  double q = 0.0;
  double p = 0.0;
  double lambda_q = 0.0;
  SpinorField field; //!< phi_q = lambda_q^{1/2} psi_q
  double el_residual = 0.0;
  double constraint_defect = 0.0;
  double ipr = 0.0; //!< V ||phi||_4^4 / ||phi||_2^4, 1 for constant modulus
  int iterations = 0;
  bool converged = false;
  int branch = +1;                  //!< sign of the pairing that was minimized
  std::vector<double> probe_values; //!< F_q of the starting candidates
  double competitor = 0.0;          //!< F_q of the lowest eigenspinor
};

/*!
  Minimizes F_q(psi) = ||H^{-1/p} D psi||_q^2 / Re <D psi, psi> over the
  positive branch. The search runs in u = D psi, where the quotient becomes
  ||H^{-1/p} u||_q^2 / Re <u, D^{-1} u>, with Barzilai-Borwein steps,
  Armijo backtracking and u rescaled to unit pairing after every step.
  |u|^{q-2} is smoothed as (|u|^2 + mu^2)^{(q-2)/2} along mu_schedule, then
  a final unsmoothed stage runs until the residual of (E_q) meets tolerance.
  start, if given, is a psi-space initial field.
*/
SolutionReport minimize_subcritical(const DiracOperator &D, const ScalarField *H,
                                    double q, const SolverOptions &opts = {},
                                    const SpinorField *start = nullptr);

//! ||D phi - lambda H |phi|^{p-2} phi||_2 / ||D phi||_2
double euler_lagrange_residual(const DiracOperator &D, const ScalarField *H,
                               const SolutionReport &report);
//! |int H |phi|^p - 1|
double constraint_defect(const ScalarField *H, const SolutionReport &report);

std::vector<SolutionReport> lambda_sweep(const DiracOperator &D, const ScalarField *H,
                                         const std::vector<double> &q_list,
                                         const SolverOptions &opts = {});

struct Extrapolation {
  double value = 0.0;
  double slope = 0.0;
  int points = 0;
};
/*!
  Least-squares line through the `points` sweep entries nearest q_D,
  evaluated at q_D.
*/
Extrapolation extrapolate_to_critical(const std::vector<SolutionReport> &sweep, int n,
                                      int points = 2);

//! lambda < bound (1 - margin), strictly.
bool nontriviality_check(double lambda_qD, const ScalarField *H, int n,
                         double margin = 0.0);

double max_adjacent_jump(const std::vector<SolutionReport> &sweep);

/*!
  min over `count` seeded random directions dpsi (unit L2) of
  F_q(psi_q + h dpsi) - lambda_q.
*/
double probe_dominance(const DiracOperator &D, const ScalarField *H,
                       const SolutionReport &report, int count = 100, double h = 1e-3,
                       std::uint64_t seed = 7);

} // namespace spinorlab
