#pragma once
#include "spinorlab/clifford.hpp"
#include "spinorlab/grid.hpp"
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace spinorlab {

/*!
  Flat Dirac operator D = sum_j gamma_j d_j on a torus, diagonalized by the
  FFT. Mode (m_1..m_n) carries k_j = 2 pi (m_j + delta_j) / L_j with
  delta_j = 1/2 on antiperiodic axes; the symbol is sigma(k) = i sum k_j gamma_j,
  Hermitian with sigma(k)^2 = |k|^2.

  Periodic axes with even N have their Nyquist wavenumber set to zero so that
  the discrete operator stays symmetric. Antiperiodic axes are symmetric as is.
*/
class DiracOperator {
public:
  DiracOperator(GridSpec grid, CliffordRep rep);
  ~DiracOperator();
  DiracOperator(const DiracOperator &) = delete;
  DiracOperator &operator=(const DiracOperator &) = delete;

  const GridSpec &grid() const { return grid_; }
  const CliffordRep &rep() const { return rep_; }
  int n() const { return grid_.n; }
  int fiber() const { return rep_.fiber_dim; }

  //! Wavenumbers of axis a in FFT storage order.
  const std::vector<double> &wavenumbers(int a) const { return k_[a]; }
  //! Signed mode index m (fftfreq convention) of FFT slot j on axis a.
  int mode_index(int a, int j) const;
  void mode_k(std::size_t mode, double *k) const;
  double mode_abs_k(std::size_t mode) const;
  bool invertible() const { return invertible_; }

  SpinorField apply(const SpinorField &f) const;
  SpinorField invert(const SpinorField &f) const;
  //! Componentwise flat derivative d_a f.
  SpinorField derivative(const SpinorField &f, int a) const;
  //! Zero all modes outside |m + delta| < N/3 on every axis.
  SpinorField truncate_two_thirds(const SpinorField &f) const;

  //! Coefficients c_k with f(x) = sum_k c_k e^{i k.x}, fiber fastest.
  std::vector<cplx> coefficients(const SpinorField &f) const;
  SpinorField synthesize(const std::vector<cplx> &c) const;

  //! Generic Fourier multiplier: fn(k, |k|, in, out) acts on one mode's fiber vector.
  using ModeMap = std::function<void(const double *k, double kabs,
                                     const cplx *in, cplx *out)>;
  SpinorField apply_multiplier(const SpinorField &f, const ModeMap &fn) const;

  //! Sorted eigenvalues of the discrete operator, multiplicities included.
  std::vector<double> spectrum() const;
  double smallest_positive_eigenvalue() const;
  /*!
    L2-normalized eigenspinor for the smallest positive eigenvalue. Among
    degenerate modes the lexicographically smallest (m_1..m_n) wins; inside a
    mode the positive eigenvector is the normalized projection of the first
    basis vector that survives (1 + sigma/|k|)/2.
  */
  SpinorField lowest_eigenspinor() const;
  //! e^{i k.x} s for the mode with signed indices m.
  SpinorField plane_wave(const std::vector<int> &m, const Eigen::VectorXcd &s) const;
  Eigen::MatrixXcd symbol(const double *k) const;

private:
  void twist(cplx *data, int fiber, int sign) const;

  GridSpec grid_;
  CliffordRep rep_;
  std::vector<std::vector<double>> k_;
  std::vector<std::vector<cplx>> phase_; // e^{i pi j / N} on antiperiodic axes
  bool invertible_ = true;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

SpinorField dirac_apply(const DiracOperator &op, const SpinorField &f);
//! Throws std::domain_error on a structure with a zero mode.
SpinorField dirac_invert(const DiracOperator &op, const SpinorField &f);
std::vector<double> spectrum(const DiracOperator &op);
/*!
  e^{-(n+1)u/2} D(e^{(n-1)u/2} f); the product is truncated by the 2/3 rule
  before D is applied (skipped when u is constant). Spinors are identified
  componentwise.
*/
SpinorField conformal_dirac_apply(const DiracOperator &op, const SpinorField &f,
                                  const ScalarField &u);

/*!
  Seeded random spinor: complex Gaussian coefficients on the modes with
  |m_a + delta_a| <= mode_radius on every axis, damped by (1 + |k|^2 / k0^2)^{-1}
  where k0 is the smallest |k| on the grid, then L2-normalized. Draws follow
  the signed mode order, so grids of different N holding the same box give
  the same function. The box is clipped to the grid; an empty box throws.
*/
SpinorField random_spinor(const DiracOperator &op, std::uint64_t seed,
                          double mode_radius);
//! Seeded periodic real field: sum of cosines with integer modes |m_a| <= modes,
//! rescaled so max |u| = amplitude.
ScalarField random_scalar(const GridSpec &grid, std::uint64_t seed, int modes,
                          double amplitude);

//! Sets the FFTW thread count from SPINORLAB_THREADS (default 1). Idempotent.
int init_fft_threads();

} // namespace spinorlab
