#pragma once
#include "spinorlab/clifford.hpp"
#include <complex>
#include <cstddef>
#include <vector>

namespace spinorlab {

enum class Spin { periodic, antiperiodic };

/*!
  Uniform rectangular torus. Node j on axis a sits at x = j * L_a / N_a.
  Storage is row-major over axes in declared order (last axis fastest),
  with the fiber index fastest of all for spinor data.
*/
struct GridSpec {
  int n = 0;
  std::vector<int> sizes;
  std::vector<double> lengths;
  std::vector<Spin> spin;

  static GridSpec cube(int n, int N, double L, Spin s = Spin::antiperiodic);

  void validate() const;
  std::size_t points() const;
  double cell_volume() const;
  double volume() const;
  double spacing(int axis) const { return lengths[axis] / sizes[axis]; }
  //! Multi-index of flat point index i.
  void unravel(std::size_t i, int *idx) const;
  std::size_t ravel(const int *idx) const;
  //! Index of the node nearest the middle of the box (N_a / 2 on every axis).
  std::vector<int> center_index() const;
  //! Minimal-image displacement x(i) - x(c), each component in [-L/2, L/2).
  void displacement(std::size_t i, const std::vector<int> &c, double *d) const;
  /*!
    Stored spinor values are sections over [0, L). The section at x(c) + d,
    d the minimal image, equals image_sign(i, c) times the value stored at i:
    -1 per antiperiodic axis on which the minimal image wraps.
  */
  double image_sign(std::size_t i, const std::vector<int> &c) const;

  bool operator==(const GridSpec &o) const = default;
};

struct SpinorField {
  GridSpec grid;
  int fiber = 1;
  std::vector<cplx> values;

  SpinorField() = default;
  SpinorField(const GridSpec &g, int fiber_dim);
  SpinorField(const GridSpec &g, const CliffordRep &rep)
      : SpinorField(g, rep.fiber_dim) {}

  cplx *at(std::size_t i) { return values.data() + i * fiber; }
  const cplx *at(std::size_t i) const { return values.data() + i * fiber; }
  double norm2_at(std::size_t i) const;
  std::size_t points() const { return values.size() / fiber; }

  SpinorField &operator+=(const SpinorField &o);
  SpinorField &operator-=(const SpinorField &o);
  SpinorField &operator*=(cplx c);
  bool all_finite() const;
};

SpinorField operator+(SpinorField a, const SpinorField &b);
SpinorField operator-(SpinorField a, const SpinorField &b);
SpinorField operator*(cplx c, SpinorField a);

struct ScalarField {
  GridSpec grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridSpec &g, double fill = 0.0);
  double min() const;
  double max() const;
};

//! (sum_x w(x)|f(x)|^p dV)^(1/p)
double lp_norm(const SpinorField &f, double p, const ScalarField *weight = nullptr);
double lp_norm(const ScalarField &f, double p);
//! sum_x <f(x), g(x)> dV, Hermitian product antilinear in the first slot.
cplx pairing(const SpinorField &f, const SpinorField &g);
//! Relative L2 distance ||a - b|| / ||b||.
double rel_l2(const SpinorField &a, const SpinorField &b);
//! Pointwise product w(x) f(x).
SpinorField multiply(const ScalarField &w, SpinorField f);

/*!
  C_eps for (a+b)^p <= (1+eps) a^p + C_eps b^p, p in (0,1], a,b >= 0.
  Closed form (1 - (1+eps)^(-1/(1-p)))^(-(1-p)); p = 1 gives 1.
*/
double split_constant(double p, double eps);

} // namespace spinorlab
