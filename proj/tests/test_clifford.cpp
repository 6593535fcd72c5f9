#include "spinorlab/clifford.hpp"
#include <catch_amalgamated.hpp>
#include <random>

using namespace spinorlab;
using Catch::Approx;

namespace {
Eigen::VectorXcd random_fiber(int d, std::mt19937_64 &rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXcd s(d);
  for (int i = 0; i < d; ++i)
    s[i] = cplx(nd(rng), nd(rng));
  return s;
}
} // namespace

TEST_CASE("n=1 is the 1x1 matrix (i)") {
  const auto rep = build_clifford(1);
  REQUIRE(rep.fiber_dim == 1);
  REQUIRE(rep.gammas.size() == 1);
  REQUIRE(rep.gammas[0](0, 0) == cplx(0.0, 1.0));
  REQUIRE((rep.gammas[0] * rep.gammas[0])(0, 0) == cplx(-1.0, 0.0));
}

TEST_CASE("fiber dimension is 2^floor(n/2)") {
  for (int n = 1; n <= 8; ++n) {
    const auto rep = build_clifford(n);
    REQUIRE(rep.fiber_dim == (1 << (n / 2)));
    for (const auto &g : rep.gammas) {
      REQUIRE(g.rows() == rep.fiber_dim);
      REQUIRE(g.cols() == rep.fiber_dim);
    }
  }
}

TEST_CASE("anticommutation and skew-adjointness hold exactly") {
  for (int n = 1; n <= 8; ++n) {
    const auto rep = build_clifford(n);
    const auto I = Eigen::MatrixXcd::Identity(rep.fiber_dim, rep.fiber_dim);
    for (int j = 0; j < n; ++j) {
      REQUIRE((rep.gammas[j].adjoint() + rep.gammas[j]).cwiseAbs().maxCoeff() == 0.0);
      for (int k = 0; k < n; ++k) {
        const Eigen::MatrixXcd ac = rep.gammas[j] * rep.gammas[k] + rep.gammas[k] * rep.gammas[j];
        const Eigen::MatrixXcd expect = (j == k ? -2.0 : 0.0) * I;
        REQUIRE((ac - expect).cwiseAbs().maxCoeff() == 0.0);
      }
    }
  }
}

TEST_CASE("n=2 and n=4 relations") {
  const auto r2 = build_clifford(2);
  REQUIRE(((r2.gammas[0] * r2.gammas[1]) + (r2.gammas[1] * r2.gammas[0])).cwiseAbs().maxCoeff() == 0.0);
  const auto r4 = build_clifford(4);
  REQUIRE(r4.fiber_dim == 4);
  int pairs = 0;
  for (int j = 0; j < 4; ++j)
    for (int k = j; k < 4; ++k, ++pairs) {
      const Eigen::MatrixXcd ac = r4.gammas[j] * r4.gammas[k] + r4.gammas[k] * r4.gammas[j];
      const double target = j == k ? -2.0 : 0.0;
      REQUIRE((ac - target * Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-14);
    }
  REQUIRE(pairs == 10);
}

TEST_CASE("pinned entries for n <= 3") {
  // n=2: i sigma_x, i sigma_y;  n=3 adds i sigma_z
  const cplx I{0.0, 1.0};
  const auto r3 = build_clifford(3);
  REQUIRE(r3.gammas[0](0, 1) == I);
  REQUIRE(r3.gammas[0](1, 0) == I);
  REQUIRE(r3.gammas[1](0, 1) == cplx(1.0, 0.0));
  REQUIRE(r3.gammas[1](1, 0) == cplx(-1.0, 0.0));
  REQUIRE(r3.gammas[2](0, 0) == I);
  REQUIRE(r3.gammas[2](1, 1) == -I);
}

TEST_CASE("entries lie in {0, +-1, +-i}") {
  for (int n = 1; n <= 6; ++n)
    for (const auto &g : build_clifford(n).gammas)
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        const cplx z = g.data()[i];
        const bool ok = z == 0.0 || std::abs(std::abs(z) - 1.0) == 0.0;
        const bool axis = z.real() == 0.0 || z.imag() == 0.0;
        REQUIRE((ok && axis));
      }
}

TEST_CASE("construction is reproducible bit for bit") {
  for (int n = 1; n <= 8; ++n) {
    const auto a = build_clifford(n), b = build_clifford(n);
    for (int j = 0; j < n; ++j)
      REQUIRE(a.gammas[j] == b.gammas[j]);
  }
}

TEST_CASE("dimension limits are enforced") {
  REQUIRE_THROWS_AS(build_clifford(0), std::invalid_argument);
  REQUIRE_THROWS_AS(build_clifford(9), std::invalid_argument);
  REQUIRE_NOTHROW(build_clifford(9, 9));
}

TEST_CASE("Clifford multiplication by vectors") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int n = 1; n <= 6; ++n) {
    const auto rep = build_clifford(n);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> v(n);
      for (auto &x : v)
        x = nd(rng);
      const double v2 = std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
      const auto s = random_fiber(rep.fiber_dim, rng);
      const auto vs = clifford_mul(rep, v, s);
      // v.(v.s) = -|v|^2 s
      REQUIRE((clifford_mul(rep, v, vs) + v2 * s).norm() <= 1e-12 * s.norm() * v2);
      // Re <v.s, s> = 0
      REQUIRE(std::abs(vs.dot(s).real()) <= 1e-12 * s.squaredNorm() * std::sqrt(v2));
      // |v.s| = |v||s|
      REQUIRE(vs.norm() == Approx(std::sqrt(v2) * s.norm()).epsilon(1e-13));
    }
    // e_1.(e_1.s) = -s
    std::vector<double> e1(n, 0.0);
    e1[0] = 1.0;
    const auto s = random_fiber(rep.fiber_dim, rng);
    REQUIRE((clifford_mul(rep, e1, clifford_mul(rep, e1, s)) + s).norm() <= 1e-14 * s.norm());
  }
}

TEST_CASE("polarized anticommutation on random fibers") {
  std::mt19937_64 rng(5);
  for (int n = 2; n <= 6; ++n) {
    const auto rep = build_clifford(n);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        if (j == k)
          continue;
        const auto s = random_fiber(rep.fiber_dim, rng);
        const Eigen::VectorXcd a = rep.gammas[j] * s, b = rep.gammas[k] * s;
        REQUIRE(std::abs(a.dot(b) + b.dot(a)) <= 1e-12 * s.squaredNorm());
      }
  }
}

TEST_CASE("e1 + e2 in n=2 doubles the squared modulus") {
  const auto rep = build_clifford(2);
  std::mt19937_64 rng(3);
  const auto s = random_fiber(2, rng);
  const std::vector<double> v{1.0, 1.0};
  REQUIRE(clifford_mul(rep, v, s).squaredNorm() == Approx(2.0 * s.squaredNorm()).epsilon(1e-14));
}

TEST_CASE("dimension mismatch is rejected") {
  const auto rep = build_clifford(3);
  const std::vector<double> v{1.0, 0.0};
  REQUIRE_THROWS_AS(clifford_mul(rep, v, Eigen::VectorXcd::Zero(2)), std::invalid_argument);
  const std::vector<double> w{1.0, 0.0, 0.0};
  REQUIRE_THROWS_AS(clifford_mul(rep, w, Eigen::VectorXcd::Zero(3)), std::invalid_argument);
}
