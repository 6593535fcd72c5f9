#pragma once
#include <Eigen/Dense>
#include <complex>
#include <span>
#include <vector>

namespace spinorlab {

using cplx = std::complex<double>;

/*!
  Explicit complex representation of Cl(n) acting on a fiber of dimension
  2^floor(n/2), with gamma_j gamma_k + gamma_k gamma_j = -2 delta_jk.

  Construction (fixed, so regression tests can pin entries): Hermitian
  Euclidean matrices E_j are built recursively,
    n = 1:        E = (1)
    n = 2k+2:     E_j(2k+1) (x) sigma_x  for j <= 2k+1,  then  I (x) sigma_y
    n = 2k+3:     the n = 2k+2 set, then  I (x) sigma_z
  with the Kronecker index (a (x) b)[i*dim_b + a, ...]. gamma_j = i E_j.

  n = 1 is only an oracle testbed; gamma_1 = (i).
*/
struct CliffordRep {
  int n = 0;
  int fiber_dim = 0;
  std::vector<Eigen::MatrixXcd> gammas;
};

constexpr int default_max_clifford_dim = 8;

CliffordRep build_clifford(int n, int max_n = default_max_clifford_dim);

//! v.s = sum_j v_j gamma_j s
Eigen::VectorXcd clifford_mul(const CliffordRep &rep, std::span<const double> v,
                              const Eigen::VectorXcd &s);

//! Raw-pointer form used in field loops; out must not alias s.
void clifford_mul(const CliffordRep &rep, const double *v, const cplx *s,
                  cplx *out);

//! The matrix sum_j v_j gamma_j.
Eigen::MatrixXcd clifford_matrix(const CliffordRep &rep,
                                 std::span<const double> v);

} // namespace spinorlab
