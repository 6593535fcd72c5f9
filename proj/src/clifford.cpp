#include "spinorlab/clifford.hpp"
#include <stdexcept>
#include <string>

namespace spinorlab {

namespace {

Eigen::MatrixXcd kron(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Hermitian, pairwise anticommuting, squaring to +1
std::vector<Eigen::MatrixXcd> euclidean_set(int n) {
  if (n == 1)
    return {Eigen::MatrixXcd::Identity(1, 1)};
  const cplx I{0.0, 1.0};
  Eigen::MatrixXcd sx(2, 2), sy(2, 2), sz(2, 2);
  sx << 0.0, 1.0, 1.0, 0.0;
  sy << 0.0, -I, I, 0.0;
  sz << 1.0, 0.0, 0.0, -1.0;
  if (n % 2 == 0) {
    auto prev = euclidean_set(n - 1);
    const auto id = Eigen::MatrixXcd::Identity(prev[0].rows(), prev[0].cols());
    std::vector<Eigen::MatrixXcd> out;
    for (const auto &e : prev)
      out.push_back(kron(e, sx));
    out.push_back(kron(id, sy));
    return out;
  }
  auto out = euclidean_set(n - 1);
  const auto id = Eigen::MatrixXcd::Identity(out[0].rows() / 2, out[0].cols() / 2);
  out.push_back(kron(id, sz));
  return out;
}

} // namespace

CliffordRep build_clifford(int n, int max_n) {
  if (n < 1 || n > max_n)
    throw std::invalid_argument("build_clifford: n=" + std::to_string(n) +
                                " outside [1, " + std::to_string(max_n) + "]");
  CliffordRep rep;
  rep.n = n;
  rep.fiber_dim = 1 << (n / 2);
  const cplx I{0.0, 1.0};
  for (auto &e : euclidean_set(n))
    rep.gammas.push_back(I * e);
  return rep;
}

Eigen::MatrixXcd clifford_matrix(const CliffordRep &rep,
                                 std::span<const double> v) {
  if (static_cast<int>(v.size()) != rep.n)
    throw std::invalid_argument("clifford_matrix: vector length mismatch");
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(rep.fiber_dim, rep.fiber_dim);
  for (int j = 0; j < rep.n; ++j)
    m += v[j] * rep.gammas[j];
  return m;
}

Eigen::VectorXcd clifford_mul(const CliffordRep &rep, std::span<const double> v,
                              const Eigen::VectorXcd &s) {
  if (static_cast<int>(v.size()) != rep.n || s.size() != rep.fiber_dim)
    throw std::invalid_argument("clifford_mul: dimension mismatch");
  Eigen::VectorXcd out(rep.fiber_dim);
  clifford_mul(rep, v.data(), s.data(), out.data());
  return out;
}

void clifford_mul(const CliffordRep &rep, const double *v, const cplx *s,
                  cplx *out) {
  const int d = rep.fiber_dim;
  for (int a = 0; a < d; ++a)
    out[a] = 0.0;
  for (int j = 0; j < rep.n; ++j) {
    if (v[j] == 0.0)
      continue;
    const auto &g = rep.gammas[j];
    for (int a = 0; a < d; ++a) {
      cplx acc = 0.0;
      for (int b = 0; b < d; ++b)
        acc += g(a, b) * s[b];
      out[a] += v[j] * acc;
    }
  }
}

} // namespace spinorlab
