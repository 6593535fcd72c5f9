#include "spinorlab/dirac.hpp"
#include <fftw3.h>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>

namespace spinorlab {

namespace {
std::mutex &planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftBuffer {
  explicit FftBuffer(std::size_t n)
      : p(static_cast<cplx *>(fftw_malloc(sizeof(cplx) * std::max<std::size_t>(n, 1)))) {
    if (!p)
      throw std::bad_alloc();
  }
  ~FftBuffer() { fftw_free(p); }
  FftBuffer(const FftBuffer &) = delete;
  FftBuffer &operator=(const FftBuffer &) = delete;
  cplx *p;
};
} // namespace

int init_fft_threads() {
  static int threads = [] {
    int t = 1;
    if (const char *env = std::getenv("SPINORLAB_THREADS")) {
      t = std::atoi(env);
      if (t < 1)
        t = 1;
    }
    std::lock_guard lock(planner_mutex());
    fftw_init_threads();
    fftw_plan_with_nthreads(t);
    return t;
  }();
  return threads;
}

struct DiracOperator::Plans {
  // keyed by number of interleaved components
  std::map<int, std::pair<fftw_plan, fftw_plan>> by_fiber;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    for (auto &[f, pr] : by_fiber) {
      fftw_destroy_plan(pr.first);
      fftw_destroy_plan(pr.second);
    }
  }
};

DiracOperator::DiracOperator(GridSpec grid, CliffordRep rep)
    : grid_(std::move(grid)), rep_(std::move(rep)), plans_(std::make_unique<Plans>()) {
  grid_.validate();
  if (rep_.n != grid_.n)
    throw std::invalid_argument("DiracOperator: Clifford dimension differs from grid");
  init_fft_threads();
  const double pi = std::numbers::pi;
  k_.resize(grid_.n);
  phase_.resize(grid_.n);
  bool has_zero = true;
  for (int a = 0; a < grid_.n; ++a) {
    const int N = grid_.sizes[a];
    const bool anti = grid_.spin[a] == Spin::antiperiodic;
    if (!anti && N % 2 != 0)
      throw std::invalid_argument("DiracOperator: periodic axes need even N");
    k_[a].resize(N);
    for (int j = 0; j < N; ++j) {
      const int m = mode_index(a, j);
      if (anti)
        k_[a][j] = 2.0 * pi * (m + 0.5) / grid_.lengths[a];
      else
        k_[a][j] = (2 * m == -N) ? 0.0 : 2.0 * pi * m / grid_.lengths[a];
    }
    if (anti) {
      has_zero = false;
      phase_[a].resize(N);
      for (int j = 0; j < N; ++j)
        phase_[a][j] = std::polar(1.0, pi * j / N);
    }
  }
  invertible_ = !has_zero;

  std::lock_guard lock(planner_mutex());
  std::vector<int> dims(grid_.sizes);
  const std::size_t P = grid_.points();
  for (int f : {1, rep_.fiber_dim}) {
    if (plans_->by_fiber.count(f))
      continue;
    FftBuffer buf(P * f);
    auto *d = reinterpret_cast<fftw_complex *>(buf.p);
    fftw_plan fw = fftw_plan_many_dft(grid_.n, dims.data(), f, d, nullptr, f, 1, d,
                                      nullptr, f, 1, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_plan bw = fftw_plan_many_dft(grid_.n, dims.data(), f, d, nullptr, f, 1, d,
                                      nullptr, f, 1, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!fw || !bw)
      throw std::runtime_error("DiracOperator: FFTW planning failed");
    plans_->by_fiber[f] = {fw, bw};
  }
}

DiracOperator::~DiracOperator() = default;

int DiracOperator::mode_index(int a, int j) const {
  const int N = grid_.sizes[a];
  return j < (N + 1) / 2 ? j : j - N;
}

void DiracOperator::mode_k(std::size_t mode, double *k) const {
  int idx[16];
  grid_.unravel(mode, idx);
  for (int a = 0; a < grid_.n; ++a)
    k[a] = k_[a][idx[a]];
}

double DiracOperator::mode_abs_k(std::size_t mode) const {
  double k[16], s = 0.0;
  mode_k(mode, k);
  for (int a = 0; a < grid_.n; ++a)
    s += k[a] * k[a];
  return std::sqrt(s);
}

void DiracOperator::twist(cplx *data, int fiber, int sign) const {
  bool any = false;
  for (int a = 0; a < grid_.n; ++a)
    any = any || !phase_[a].empty();
  if (!any)
    return;
  const std::size_t P = grid_.points();
  int idx[16];
  for (std::size_t i = 0; i < P; ++i) {
    grid_.unravel(i, idx);
    cplx ph = 1.0;
    for (int a = 0; a < grid_.n; ++a)
      if (!phase_[a].empty())
        ph *= phase_[a][idx[a]];
    if (sign < 0)
      ph = std::conj(ph);
    for (int c = 0; c < fiber; ++c)
      data[i * fiber + c] *= ph;
  }
}

namespace {
void execute(const std::pair<fftw_plan, fftw_plan> &pr, cplx *d, bool forward) {
  auto *z = reinterpret_cast<fftw_complex *>(d);
  fftw_execute_dft(forward ? pr.first : pr.second, z, z);
}
} // namespace

std::vector<cplx> DiracOperator::coefficients(const SpinorField &f) const {
  if (!(f.grid == grid_))
    throw std::invalid_argument("DiracOperator: field on another grid");
  const std::size_t P = grid_.points();
  auto it = plans_->by_fiber.find(f.fiber);
  if (it == plans_->by_fiber.end())
    throw std::invalid_argument("DiracOperator: unsupported fiber dimension");
  FftBuffer buf(P * f.fiber);
  std::copy(f.values.begin(), f.values.end(), buf.p);
  twist(buf.p, f.fiber, -1);
  execute(it->second, buf.p, true);
  const double s = 1.0 / static_cast<double>(P);
  std::vector<cplx> c(buf.p, buf.p + P * f.fiber);
  for (auto &z : c)
    z *= s;
  return c;
}

SpinorField DiracOperator::synthesize(const std::vector<cplx> &c) const {
  const std::size_t P = grid_.points();
  const int fib = static_cast<int>(c.size() / P);
  auto it = plans_->by_fiber.find(fib);
  if (c.size() != P * fib || it == plans_->by_fiber.end())
    throw std::invalid_argument("DiracOperator: coefficient array has wrong size");
  FftBuffer buf(P * fib);
  std::copy(c.begin(), c.end(), buf.p);
  execute(it->second, buf.p, false);
  twist(buf.p, fib, +1);
  SpinorField f(grid_, fib);
  std::copy(buf.p, buf.p + P * fib, f.values.begin());
  return f;
}

SpinorField DiracOperator::apply_multiplier(const SpinorField &f,
                                            const ModeMap &fn) const {
  if (!(f.grid == grid_))
    throw std::invalid_argument("DiracOperator: field on another grid");
  const std::size_t P = grid_.points();
  const int fib = f.fiber;
  auto it = plans_->by_fiber.find(fib);
  if (it == plans_->by_fiber.end())
    throw std::invalid_argument("DiracOperator: unsupported fiber dimension");
  FftBuffer buf(P * fib);
  std::copy(f.values.begin(), f.values.end(), buf.p);
  twist(buf.p, fib, -1);
  execute(it->second, buf.p, true);
  std::vector<cplx> in(fib), out(fib);
  double k[16];
  int idx[16];
  const double s = 1.0 / static_cast<double>(P);
  for (std::size_t m = 0; m < P; ++m) {
    grid_.unravel(m, idx);
    double k2 = 0.0;
    for (int a = 0; a < grid_.n; ++a) {
      k[a] = k_[a][idx[a]];
      k2 += k[a] * k[a];
    }
    cplx *z = buf.p + m * fib;
    for (int c = 0; c < fib; ++c)
      in[c] = z[c] * s;
    fn(k, std::sqrt(k2), in.data(), out.data());
    for (int c = 0; c < fib; ++c)
      z[c] = out[c];
  }
  execute(it->second, buf.p, false);
  twist(buf.p, fib, +1);
  SpinorField g(grid_, fib);
  std::copy(buf.p, buf.p + P * fib, g.values.begin());
  return g;
}

SpinorField DiracOperator::apply(const SpinorField &f) const {
  if (f.fiber != rep_.fiber_dim)
    throw std::invalid_argument("dirac_apply: fiber dimension mismatch");
  const CliffordRep &rep = rep_;
  return apply_multiplier(f, [&rep](const double *k, double, const cplx *in, cplx *out) {
    clifford_mul(rep, k, in, out);
    for (int c = 0; c < rep.fiber_dim; ++c)
      out[c] *= cplx(0.0, 1.0);
  });
}

SpinorField DiracOperator::invert(const SpinorField &f) const {
  if (!invertible_)
    throw std::domain_error("dirac_invert: spin structure has a zero mode");
  if (f.fiber != rep_.fiber_dim)
    throw std::invalid_argument("dirac_invert: fiber dimension mismatch");
  const CliffordRep &rep = rep_;
  return apply_multiplier(f, [&rep](const double *k, double kabs, const cplx *in, cplx *out) {
    clifford_mul(rep, k, in, out);
    const cplx s(0.0, 1.0 / (kabs * kabs));
    for (int c = 0; c < rep.fiber_dim; ++c)
      out[c] *= s;
  });
}

SpinorField DiracOperator::derivative(const SpinorField &f, int a) const {
  return apply_multiplier(f, [a, &f](const double *k, double, const cplx *in, cplx *out) {
    for (int c = 0; c < f.fiber; ++c)
      out[c] = cplx(0.0, k[a]) * in[c];
  });
}

SpinorField DiracOperator::truncate_two_thirds(const SpinorField &f) const {
  std::vector<double> cut(grid_.n);
  for (int a = 0; a < grid_.n; ++a)
    cut[a] = grid_.sizes[a] * std::numbers::pi / (3.0 * grid_.lengths[a]) * 2.0;
  // |k_a| < (2/3) * k_nyquist
  return apply_multiplier(f, [&](const double *k, double, const cplx *in, cplx *out) {
    bool keep = true;
    for (int a = 0; a < grid_.n; ++a)
      keep = keep && std::abs(k[a]) < cut[a];
    for (int c = 0; c < f.fiber; ++c)
      out[c] = keep ? in[c] : 0.0;
  });
}

Eigen::MatrixXcd DiracOperator::symbol(const double *k) const {
  return cplx(0.0, 1.0) * clifford_matrix(rep_, std::span<const double>(k, grid_.n));
}

std::vector<double> DiracOperator::spectrum() const {
  const std::size_t P = grid_.points();
  const int d = rep_.fiber_dim;
  std::vector<double> ev;
  ev.reserve(P * d);
  double k[16];
  for (std::size_t m = 0; m < P; ++m) {
    if (d == 1) {
      mode_k(m, k);
      ev.push_back(-k[0]); // sigma = i k (i) = -k
      continue;
    }
    const double kabs = mode_abs_k(m);
    for (int c = 0; c < d / 2; ++c) {
      ev.push_back(kabs);
      ev.push_back(-kabs);
    }
  }
  std::sort(ev.begin(), ev.end());
  return ev;
}

double DiracOperator::smallest_positive_eigenvalue() const {
  const auto ev = spectrum();
  auto it = std::upper_bound(ev.begin(), ev.end(), 0.0);
  if (it == ev.end())
    throw std::domain_error("spectrum has no positive eigenvalue");
  return *it;
}

SpinorField DiracOperator::plane_wave(const std::vector<int> &m,
                                      const Eigen::VectorXcd &s) const {
  if (static_cast<int>(m.size()) != grid_.n || s.size() != rep_.fiber_dim)
    throw std::invalid_argument("plane_wave: dimension mismatch");
  std::vector<double> k(grid_.n);
  for (int a = 0; a < grid_.n; ++a) {
    const double delta = grid_.spin[a] == Spin::antiperiodic ? 0.5 : 0.0;
    k[a] = 2.0 * std::numbers::pi * (m[a] + delta) / grid_.lengths[a];
  }
  SpinorField f(grid_, rep_);
  int idx[16];
  for (std::size_t i = 0; i < grid_.points(); ++i) {
    grid_.unravel(i, idx);
    double phase = 0.0;
    for (int a = 0; a < grid_.n; ++a)
      phase += k[a] * idx[a] * grid_.spacing(a);
    const cplx e = std::polar(1.0, phase);
    for (int c = 0; c < rep_.fiber_dim; ++c)
      f.at(i)[c] = e * s[c];
  }
  return f;
}

SpinorField DiracOperator::lowest_eigenspinor() const {
  const double lam = smallest_positive_eigenvalue();
  const std::size_t P = grid_.points();
  const int d = rep_.fiber_dim;
  double k[16];
  int idx[16];
  std::vector<int> best;
  Eigen::VectorXcd vec;
  for (std::size_t mo = 0; mo < P; ++mo) {
    mode_k(mo, k);
    const double kabs = mode_abs_k(mo);
    if (std::abs(kabs - lam) > 1e-12 * std::max(1.0, lam))
      continue;
    if (d == 1 && !(k[0] < 0.0))
      continue;
    grid_.unravel(mo, idx);
    std::vector<int> m(grid_.n);
    for (int a = 0; a < grid_.n; ++a)
      m[a] = mode_index(a, idx[a]);
    if (!best.empty() && !(m < best))
      continue;
    best = m;
    if (d == 1) {
      vec = Eigen::VectorXcd::Ones(1);
      continue;
    }
    const Eigen::MatrixXcd proj =
        0.5 * (Eigen::MatrixXcd::Identity(d, d) + symbol(k) / kabs);
    for (int b = 0; b < d; ++b) {
      Eigen::VectorXcd v = proj.col(b);
      if (v.norm() > 1e-8) {
        vec = v / v.norm();
        break;
      }
    }
  }
  SpinorField f = plane_wave(best, vec);
  f *= 1.0 / std::sqrt(grid_.volume());
  return f;
}

SpinorField dirac_apply(const DiracOperator &op, const SpinorField &f) {
  return op.apply(f);
}

SpinorField dirac_invert(const DiracOperator &op, const SpinorField &f) {
  return op.invert(f);
}

std::vector<double> spectrum(const DiracOperator &op) { return op.spectrum(); }

SpinorField conformal_dirac_apply(const DiracOperator &op, const SpinorField &f,
                                  const ScalarField &u) {
  if (!(u.grid == f.grid) || !(f.grid == op.grid()))
    throw std::invalid_argument("conformal_dirac_apply: shape mismatch");
  const int n = op.n();
  ScalarField up(u.grid), down(u.grid);
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    up.values[i] = std::exp(0.5 * (n - 1) * u.values[i]);
    down.values[i] = std::exp(-0.5 * (n + 1) * u.values[i]);
  }
  // a constant factor creates no new frequencies, so nothing to de-alias
  const bool constant = std::all_of(u.values.begin(), u.values.end(),
                                    [&](double x) { return x == u.values[0]; });
  SpinorField g = multiply(up, f);
  if (!constant)
    g = op.truncate_two_thirds(g);
  return multiply(down, op.apply(g));
}

SpinorField random_spinor(const DiracOperator &op, std::uint64_t seed,
                          double mode_radius) {
  const auto &g = op.grid();
  const int d = op.fiber();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double k0 = INFINITY;
  for (std::size_t m = 0; m < g.points(); ++m) {
    const double k = op.mode_abs_k(m);
    if (k > 0.0)
      k0 = std::min(k0, k);
  }
  // walk the mode box in signed lexicographic order so that a seed gives the
  // same band-limited field on every grid that contains the box
  std::vector<int> lo(g.n), hi(g.n), m(g.n);
  for (int a = 0; a < g.n; ++a) {
    const double delta = g.spin[a] == Spin::antiperiodic ? 0.5 : 0.0;
    lo[a] = static_cast<int>(std::ceil(-mode_radius - delta));
    hi[a] = static_cast<int>(std::floor(mode_radius - delta));
    lo[a] = std::max(lo[a], -g.sizes[a] / 2);
    hi[a] = std::min(hi[a], (g.sizes[a] + 1) / 2 - 1);
    if (lo[a] > hi[a])
      throw std::invalid_argument("random_spinor: empty mode box");
  }
  std::vector<cplx> c(g.points() * d, 0.0);
  m = lo;
  int idx[16];
  while (true) {
    for (int a = 0; a < g.n; ++a)
      idx[a] = (m[a] + g.sizes[a]) % g.sizes[a];
    const std::size_t slot = g.ravel(idx);
    const double k = op.mode_abs_k(slot);
    const double damp = 1.0 / (1.0 + k * k / (k0 * k0));
    for (int j = 0; j < d; ++j) {
      const double re = normal(rng), im = normal(rng);
      c[slot * d + j] = damp * cplx(re, im);
    }
    int a = g.n - 1;
    while (a >= 0 && m[a] == hi[a])
      m[a--] = 0;
    if (a < 0)
      break;
    for (int b = a + 1; b < g.n; ++b)
      m[b] = lo[b];
    ++m[a];
  }
  SpinorField f = op.synthesize(c);
  const double nrm = lp_norm(f, 2);
  if (nrm > 0.0)
    f *= 1.0 / nrm;
  return f;
}

ScalarField random_scalar(const GridSpec &grid, std::uint64_t seed, int modes,
                          double amplitude) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const int n = grid.n;
  std::vector<int> m(n, -modes);
  std::vector<std::pair<std::vector<int>, std::pair<double, double>>> terms;
  while (true) {
    terms.push_back({m, {normal(rng), phase(rng)}});
    int a = n - 1;
    while (a >= 0 && m[a] == modes) {
      m[a] = -modes;
      --a;
    }
    if (a < 0)
      break;
    ++m[a];
  }
  ScalarField u(grid);
  int idx[16];
  for (std::size_t i = 0; i < grid.points(); ++i) {
    grid.unravel(i, idx);
    double s = 0.0;
    for (const auto &[mm, ap] : terms) {
      double arg = ap.second;
      for (int a = 0; a < n; ++a)
        arg += 2.0 * std::numbers::pi * mm[a] * idx[a] / grid.sizes[a];
      s += ap.first * std::cos(arg);
    }
    u.values[i] = s;
  }
  double mx = 0.0;
  for (double v : u.values)
    mx = std::max(mx, std::abs(v));
  if (mx > 0.0)
    for (double &v : u.values)
      v *= amplitude / mx;
  return u;
}

} // namespace spinorlab
