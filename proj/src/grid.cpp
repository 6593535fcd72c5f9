#include "spinorlab/grid.hpp"
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spinorlab {

GridSpec GridSpec::cube(int n, int N, double L, Spin s) {
  GridSpec g;
  g.n = n;
  g.sizes.assign(n, N);
  g.lengths.assign(n, L);
  g.spin.assign(n, s);
  g.validate();
  return g;
}

void GridSpec::validate() const {
  if (n < 1 || static_cast<int>(sizes.size()) != n ||
      static_cast<int>(lengths.size()) != n || static_cast<int>(spin.size()) != n)
    throw std::invalid_argument("GridSpec: axis count mismatch");
  for (int a = 0; a < n; ++a) {
    if (sizes[a] < 2)
      throw std::invalid_argument("GridSpec: every axis needs N >= 2");
    if (!(lengths[a] > 0.0))
      throw std::invalid_argument("GridSpec: every axis needs L > 0");
  }
}

std::size_t GridSpec::points() const {
  std::size_t p = 1;
  for (int s : sizes)
    p *= static_cast<std::size_t>(s);
  return p;
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < n; ++a)
    v *= lengths[a] / sizes[a];
  return v;
}

double GridSpec::volume() const {
  double v = 1.0;
  for (double L : lengths)
    v *= L;
  return v;
}

void GridSpec::unravel(std::size_t i, int *idx) const {
  for (int a = n - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(i % sizes[a]);
    i /= sizes[a];
  }
}

std::size_t GridSpec::ravel(const int *idx) const {
  std::size_t i = 0;
  for (int a = 0; a < n; ++a)
    i = i * sizes[a] + static_cast<std::size_t>(((idx[a] % sizes[a]) + sizes[a]) % sizes[a]);
  return i;
}

std::vector<int> GridSpec::center_index() const {
  std::vector<int> c(n);
  for (int a = 0; a < n; ++a)
    c[a] = sizes[a] / 2;
  return c;
}

void GridSpec::displacement(std::size_t i, const std::vector<int> &c,
                            double *d) const {
  int idx[16];
  unravel(i, idx);
  for (int a = 0; a < n; ++a) {
    int m = idx[a] - c[a];
    const int N = sizes[a];
    m = ((m % N) + N) % N;
    if (m >= (N + 1) / 2)
      m -= N;
    d[a] = m * spacing(a);
  }
}

double GridSpec::image_sign(std::size_t i, const std::vector<int> &c) const {
  int idx[16];
  unravel(i, idx);
  double s = 1.0;
  for (int a = 0; a < n; ++a) {
    const int raw = idx[a] - c[a];
    const int N = sizes[a];
    int m = ((raw % N) + N) % N;
    if (m >= (N + 1) / 2)
      m -= N;
    if (m != raw && spin[a] == Spin::antiperiodic)
      s = -s;
  }
  return s;
}

SpinorField::SpinorField(const GridSpec &g, int fiber_dim)
    : grid(g), fiber(fiber_dim), values(g.points() * fiber_dim, cplx{0.0, 0.0}) {}

double SpinorField::norm2_at(std::size_t i) const {
  const cplx *v = at(i);
  double s = 0.0;
  for (int a = 0; a < fiber; ++a)
    s += std::norm(v[a]);
  return s;
}

static void check_same(const SpinorField &a, const SpinorField &b) {
  if (!(a.grid == b.grid) || a.fiber != b.fiber)
    throw std::invalid_argument("spinor fields live on different grids");
}

SpinorField &SpinorField::operator+=(const SpinorField &o) {
  check_same(*this, o);
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] += o.values[i];
  return *this;
}

SpinorField &SpinorField::operator-=(const SpinorField &o) {
  check_same(*this, o);
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] -= o.values[i];
  return *this;
}

SpinorField &SpinorField::operator*=(cplx c) {
  for (auto &v : values)
    v *= c;
  return *this;
}

bool SpinorField::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](cplx z) {
    return std::isfinite(z.real()) && std::isfinite(z.imag());
  });
}

SpinorField operator+(SpinorField a, const SpinorField &b) { return a += b; }
SpinorField operator-(SpinorField a, const SpinorField &b) { return a -= b; }
SpinorField operator*(cplx c, SpinorField a) { return a *= c; }

ScalarField::ScalarField(const GridSpec &g, double fill)
    : grid(g), values(g.points(), fill) {}

double ScalarField::min() const {
  return *std::min_element(values.begin(), values.end());
}
double ScalarField::max() const {
  return *std::max_element(values.begin(), values.end());
}

double lp_norm(const SpinorField &f, double p, const ScalarField *weight) {
  if (p < 1.0)
    throw std::invalid_argument("lp_norm: p must be >= 1");
  if (weight && !(weight->grid == f.grid))
    throw std::invalid_argument("lp_norm: weight lives on another grid");
  const std::size_t N = f.points();
  double s = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double a2 = f.norm2_at(i);
    if (a2 == 0.0)
      continue;
    const double t = p == 2.0 ? a2 : std::pow(a2, 0.5 * p);
    s += weight ? weight->values[i] * t : t;
  }
  return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

double lp_norm(const ScalarField &f, double p) {
  if (p < 1.0)
    throw std::invalid_argument("lp_norm: p must be >= 1");
  double s = 0.0;
  for (double v : f.values)
    s += std::pow(std::abs(v), p);
  return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

cplx pairing(const SpinorField &f, const SpinorField &g) {
  check_same(f, g);
  cplx s = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i)
    s += std::conj(f.values[i]) * g.values[i];
  return s * f.grid.cell_volume();
}

double rel_l2(const SpinorField &a, const SpinorField &b) {
  check_same(a, b);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    num += std::norm(a.values[i] - b.values[i]);
    den += std::norm(b.values[i]);
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

SpinorField multiply(const ScalarField &w, SpinorField f) {
  if (!(w.grid == f.grid))
    throw std::invalid_argument("multiply: grid mismatch");
  for (std::size_t i = 0; i < f.points(); ++i)
    for (int a = 0; a < f.fiber; ++a)
      f.at(i)[a] *= w.values[i];
  return f;
}

double split_constant(double p, double eps) {
  if (!(p > 0.0 && p <= 1.0) || !(eps > 0.0))
    throw std::invalid_argument("split_constant: need p in (0,1], eps > 0");
  if (p == 1.0)
    return 1.0;
  return std::pow(1.0 - std::pow(1.0 + eps, -1.0 / (1.0 - p)), -(1.0 - p));
}

} // namespace spinorlab
