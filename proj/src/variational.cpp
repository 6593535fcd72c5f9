#include "spinorlab/variational.hpp"
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace spinorlab {

namespace {

double re_dot(const std::vector<cplx> &a, const std::vector<cplx> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return s;
}

// Quotient in u-space. hw = H^{-q/p} per point (empty for H = 1).
struct Quotient {
  const DiracOperator &D;
  std::vector<double> hw;
  double q, dV;
  int fiber;

  struct Eval {
    double F, S, P;
  };

  Eval value(const std::vector<cplx> &u, const std::vector<cplx> &iu, double mu) const {
    const std::size_t N = u.size() / fiber;
    const double mu2 = mu * mu;
    double S = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      double a2 = mu2;
      for (int c = 0; c < fiber; ++c)
        a2 += std::norm(u[i * fiber + c]);
      if (a2 == 0.0)
        continue;
      const double t = std::pow(a2, 0.5 * q);
      S += hw.empty() ? t : hw[i] * t;
    }
    S *= dV;
    const double P = re_dot(u, iu) * dV;
    return {std::pow(S, 2.0 / q) / P, S, P};
  }

  // gradient w.r.t. the dV-weighted real inner product
  void gradient(const std::vector<cplx> &u, const std::vector<cplx> &iu, double mu,
                const Eval &e, std::vector<cplx> &g) const {
    const std::size_t N = u.size() / fiber;
    const double mu2 = mu * mu;
    const double pre = 2.0 * std::pow(e.S, (2.0 - q) / q);
    g.resize(u.size());
    for (std::size_t i = 0; i < N; ++i) {
      double a2 = mu2;
      for (int c = 0; c < fiber; ++c)
        a2 += std::norm(u[i * fiber + c]);
      double w = a2 > 0.0 ? pre * std::pow(a2, 0.5 * (q - 2.0)) : 0.0;
      if (!hw.empty())
        w *= hw[i];
      for (int c = 0; c < fiber; ++c) {
        const std::size_t j = i * fiber + c;
        g[j] = (w * u[j] - 2.0 * e.F * iu[j]) / e.P;
      }
    }
  }
};

SpinorField as_field(const GridSpec &g, int fiber, const std::vector<cplx> &v) {
  SpinorField f(g, fiber);
  f.values = v;
  return f;
}

// deterministic symmetry-breaking start: a Gaussian bump around the box middle
void perturb(const GridSpec &g, int fiber, std::vector<cplx> &u, double amp) {
  if (amp == 0.0)
    return;
  const double w = 0.15 * *std::min_element(g.lengths.begin(), g.lengths.end());
  const auto c = g.center_index();
  double d[16];
  for (std::size_t i = 0; i < g.points(); ++i) {
    g.displacement(i, c, d);
    double r2 = 0.0;
    for (int a = 0; a < g.n; ++a)
      r2 += d[a] * d[a];
    const double s = 1.0 + amp * std::exp(-0.5 * r2 / (w * w));
    for (int k = 0; k < fiber; ++k)
      u[i * fiber + k] *= s;
  }
}

void fix_phase(const DiracOperator &D, SpinorField &phi) {
  const auto c = D.coefficients(phi);
  std::size_t best = 0;
  for (std::size_t j = 1; j < c.size(); ++j)
    if (std::abs(c[j]) > std::abs(c[best]) * (1.0 + 1e-12))
      best = j;
  if (std::abs(c[best]) > 0.0)
    phi *= std::conj(c[best]) / std::abs(c[best]);
}

} // namespace

bool nontriviality_check(double lambda_qD, const ScalarField *H, int n, double margin) {
  const double bound = critical_bound(n, H ? H->max() : 1.0);
  return lambda_qD < bound * (1.0 - margin);
}

double euler_lagrange_residual(const DiracOperator &D, const ScalarField *H,
                               const SolutionReport &r) {
  const SpinorField &phi = r.field;
  const SpinorField Dphi = D.apply(phi);
  SpinorField rhs(phi.grid, phi.fiber);
  for (std::size_t i = 0; i < phi.points(); ++i) {
    const double a2 = phi.norm2_at(i);
    double w = a2 > 0.0 ? r.lambda_q * std::pow(a2, 0.5 * (r.p - 2.0)) : 0.0;
    if (H)
      w *= H->values[i];
    for (int c = 0; c < phi.fiber; ++c)
      rhs.at(i)[c] = w * phi.at(i)[c];
  }
  return rel_l2(rhs, Dphi) ;
}

double constraint_defect(const ScalarField *H, const SolutionReport &r) {
  const SpinorField &phi = r.field;
  double s = 0.0;
  for (std::size_t i = 0; i < phi.points(); ++i) {
    const double t = std::pow(phi.norm2_at(i), 0.5 * r.p);
    s += H ? H->values[i] * t : t;
  }
  return std::abs(s * phi.grid.cell_volume() - 1.0);
}

SolutionReport minimize_subcritical(const DiracOperator &D, const ScalarField *H,
                                    double q, const SolverOptions &opts,
                                    const SpinorField *start) {
  const int n = D.n();
  const auto ex = ExponentPair::from_q(q, n);
  if (!ex.subcritical(n))
    throw std::invalid_argument("minimize_subcritical: q must lie strictly inside (q_D, 2)");
  if (!D.invertible())
    throw std::domain_error("minimize_subcritical: Dirac operator has a zero mode");
  if (H && H->min() <= 0.0)
    throw std::invalid_argument("minimize_subcritical: H must be positive");

  const GridSpec &g = D.grid();
  const int fib = D.fiber();
  Quotient Q{D, {}, q, g.cell_volume(), fib};
  if (H) {
    Q.hw.resize(g.points());
    for (std::size_t i = 0; i < g.points(); ++i)
      Q.hw[i] = std::pow(H->values[i], -q / ex.p);
  }

  SolutionReport rep;
  rep.q = q;
  rep.p = ex.p;

  const SpinorField eig = D.lowest_eigenspinor();
  const SpinorField Deig = D.apply(eig);
  rep.competitor = functional_F(Deig, eig, H, q);

  std::vector<cplx> u, iu;
  if (start) {
    u = D.apply(*start).values;
    const double Pstart = pairing(as_field(g, fib, u), *start).real();
    if (Pstart < 0.0)
      throw std::invalid_argument("minimize_subcritical: start lies on the negative branch");
    rep.probe_values.push_back(functional_F(as_field(g, fib, u), *start, H, q));
  } else {
    u = Deig.values;
    perturb(g, fib, u, opts.init_perturbation);
  }
  rep.probe_values.push_back(rep.competitor);

  auto renormalize = [&](std::vector<cplx> &v, std::vector<cplx> &iv) {
    const double P = re_dot(v, iv) * Q.dV;
    if (!(P > 0.0))
      throw std::runtime_error("minimize_subcritical: iterate left the positive branch");
    const double s = 1.0 / std::sqrt(P);
    for (auto &z : v)
      z *= s;
    for (auto &z : iv)
      z *= s;
  };
  iu = D.invert(as_field(g, fib, u)).values;
  renormalize(u, iu);
  if (!start)
    rep.probe_values.insert(rep.probe_values.begin(), Q.value(u, iu, 0.0).F);

  auto finish = [&](const std::vector<cplx> &uu, const std::vector<cplx> &iuu) {
    const auto e = Q.value(uu, iuu, 0.0);
    rep.lambda_q = e.F;
    SpinorField phi = as_field(g, fib, iuu);
    phi *= std::sqrt(e.F / e.P);
    fix_phase(D, phi);
    rep.field = std::move(phi);
    rep.el_residual = euler_lagrange_residual(D, H, rep);
    rep.constraint_defect = constraint_defect(H, rep);
    const double l2 = lp_norm(rep.field, 2), l4 = lp_norm(rep.field, 4);
    rep.ipr = g.volume() * std::pow(l4, 4) / std::pow(l2, 4);
    rep.converged = rep.el_residual <= opts.tolerance &&
                    rep.constraint_defect <= std::max(opts.tolerance, 1e-8);
  };

  std::vector<double> stages = opts.mu_schedule;
  stages.push_back(0.0);
  std::vector<cplx> grad, igrad, s_vec, y_vec, u_new, iu_new, g_new;
  int total = 0;
  for (std::size_t st = 0; st < stages.size(); ++st) {
    const double mu = stages[st];
    const bool last = st + 1 == stages.size();
    auto e = Q.value(u, iu, mu);
    Q.gradient(u, iu, mu, e, grad);
    double alpha = 0.0;
    int it = 0;
    for (; total < opts.max_iter && (last || it < opts.stage_iter); ++it, ++total) {
      const double gg = re_dot(grad, grad) * Q.dV;
      if (!(gg > 0.0))
        break;
      if (alpha <= 0.0)
        alpha = 1e-2 * std::sqrt(re_dot(u, u) * Q.dV / gg);
      igrad = D.invert(as_field(g, fib, grad)).values;
      // Armijo on F along -grad; D^{-1} of the trial point is linear in alpha
      bool accepted = false;
      Quotient::Eval en{};
      u_new.resize(u.size());
      iu_new.resize(u.size());
      for (int bt = 0; bt < 60; ++bt) {
        for (std::size_t j = 0; j < u.size(); ++j) {
          u_new[j] = u[j] - alpha * grad[j];
          iu_new[j] = iu[j] - alpha * igrad[j];
        }
        en = Q.value(u_new, iu_new, mu);
        if (en.P > 0.0 && en.F <= e.F - 1e-4 * alpha * gg) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted)
        break;
      renormalize(u_new, iu_new);
      en = Q.value(u_new, iu_new, mu);
      Q.gradient(u_new, iu_new, mu, en, g_new);
      double sy = 0.0, ss = 0.0;
      for (std::size_t j = 0; j < u.size(); ++j) {
        const cplx s = u_new[j] - u[j], y = g_new[j] - grad[j];
        ss += std::norm(s);
        sy += s.real() * y.real() + s.imag() * y.imag();
      }
      alpha = sy > 0.0 ? ss / sy : 2.0 * alpha;
      std::swap(u, u_new);
      std::swap(iu, iu_new);
      std::swap(grad, g_new);
      e = en;
      if (!last) {
        if (std::sqrt(re_dot(grad, grad) * re_dot(u, u)) * Q.dV < 1e-7 * e.F)
          break;
      } else if ((it + 1) % opts.check_every == 0) {
        iu = D.invert(as_field(g, fib, u)).values; // shed accumulated drift
        finish(u, iu);
        if (rep.converged)
          break;
      }
    }
  }
  iu = D.invert(as_field(g, fib, u)).values;
  finish(u, iu);
  rep.iterations = total;
  return rep;
}

std::vector<SolutionReport> lambda_sweep(const DiracOperator &D, const ScalarField *H,
                                         const std::vector<double> &q_list,
                                         const SolverOptions &opts) {
  const double qD = ExponentPair::critical_for(D.n()).q;
  for (std::size_t i = 0; i < q_list.size(); ++i) {
    if (!(q_list[i] > qD && q_list[i] < 2.0))
      throw std::invalid_argument("lambda_sweep: q outside (q_D, 2)");
    if (i > 0 && !(q_list[i] < q_list[i - 1]))
      throw std::invalid_argument("lambda_sweep: q_list must be strictly descending");
  }
  std::vector<SolutionReport> out;
  for (double q : q_list) {
    const SpinorField *start = nullptr;
    SpinorField psi;
    if (opts.warm_start && !out.empty()) {
      psi = out.back().field;
      psi *= 1.0 / std::sqrt(out.back().lambda_q);
      start = &psi;
    }
    out.push_back(minimize_subcritical(D, H, q, opts, start));
  }
  return out;
}

Extrapolation extrapolate_to_critical(const std::vector<SolutionReport> &sweep, int n,
                                      int points) {
  if (points < 2 || static_cast<int>(sweep.size()) < points)
    throw std::invalid_argument("extrapolate_to_critical: not enough sweep points");
  const double qD = ExponentPair::critical_for(n).q;
  std::vector<const SolutionReport *> sorted;
  for (const auto &r : sweep)
    sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](auto *a, auto *b) { return a->q < b->q; });
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < points; ++i) {
    const double x = sorted[i]->q - qD, y = sorted[i]->lambda_q;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = points;
  Extrapolation e;
  e.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  e.value = (sy - e.slope * sx) / m;
  e.points = points;
  return e;
}

double max_adjacent_jump(const std::vector<SolutionReport> &sweep) {
  double j = 0.0;
  for (std::size_t i = 1; i < sweep.size(); ++i)
    j = std::max(j, std::abs(sweep[i].lambda_q - sweep[i - 1].lambda_q));
  return j;
}

double probe_dominance(const DiracOperator &D, const ScalarField *H,
                       const SolutionReport &report, int count, double h,
                       std::uint64_t seed) {
  SpinorField psi = report.field;
  psi *= 1.0 / std::sqrt(report.lambda_q);
  const double base = report.lambda_q;
  double worst = INFINITY;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int k = 0; k < count; ++k) {
    SpinorField d(psi.grid, psi.fiber);
    for (auto &z : d.values)
      z = cplx(normal(rng), normal(rng));
    d *= lp_norm(psi, 2) / lp_norm(d, 2);
    SpinorField trial = psi;
    for (std::size_t j = 0; j < trial.values.size(); ++j)
      trial.values[j] += h * d.values[j];
    worst = std::min(worst, functional_F(D, trial, H, report.q) - base);
  }
  return worst;
}

} // namespace spinorlab
