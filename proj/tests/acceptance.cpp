// Acceptance run: one PASS/FAIL line per criterion A1..A9, nonzero exit if any fails.
#include "spinorlab/green.hpp"
#include "spinorlab/variational.hpp"
#include <Eigen/LU>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

using namespace spinorlab;
constexpr double pi = std::numbers::pi;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream note;
  void need(bool ok, const std::string &what) {
    if (!ok) {
      pass = false;
      note << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void run(const char *id, double budget_s, const std::function<void(Verdict &)> &body) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception &e) {
    v.pass = false;
    v.note << " [exception: " << e.what() << "]";
  }
  const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (t > budget_s) {
    v.pass = false;
    v.note << " [over budget " << budget_s << " s]";
  }
  std::printf("%s %s (%.1f s)%s\n", id, v.pass ? "PASS" : "FAIL", t, v.note.str().c_str());
  std::fflush(stdout);
  failures += !v.pass;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Killing spinor on the box [0, 2)^n with eps = 1 / radius
struct KillingRun {
  double F = 0.0, mod_err = 0.0, dirac_err = 0.0;
};

KillingRun killing_run(int n, int N, double radius, const ScalarField *H = nullptr) {
  const auto g = GridSpec::cube(n, N, 2.0);
  const auto rep = build_clifford(n);
  DiracOperator D(g, rep);
  KillingProfile prof;
  prof.n = n;
  prof.eps = 1.0 / radius;
  const auto psi = killing_spinor(rep, g, prof);
  const auto Dpsi = D.apply(psi);
  KillingRun out;
  const auto c = g.center_index();
  double d[8], num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g.points(); ++i) {
    g.displacement(i, c, d);
    double r2 = 0.0;
    for (int a = 0; a < n; ++a)
      r2 += d[a] * d[a];
    if (std::sqrt(r2) > prof.delta)
      continue;
    const double f = conformal_factor(r2 / (prof.eps * prof.eps));
    const double fn1 = std::pow(f, n - 1);
    out.mod_err = std::max(out.mod_err, std::abs(psi.norm2_at(i) - fn1) / fn1);
    const double s = g.image_sign(i, c);
    for (int k = 0; k < rep.fiber_dim; ++k) {
      const cplx want = 0.5 * n / prof.eps * f * s * psi.at(i)[k];
      num += std::norm(s * Dpsi.at(i)[k] - want);
      den += std::norm(want);
    }
  }
  out.dirac_err = std::sqrt(num / den);
  out.F = functional_F(Dpsi, psi, H, ExponentPair::critical_for(n).q);
  return out;
}

// explicit mode-sum matrix of D, independent of the FFT path
Eigen::MatrixXcd dense_dirac(const GridSpec &g, const CliffordRep &rep) {
  const int n = g.n, d = rep.fiber_dim;
  const std::size_t P = g.points();
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(P * d, P * d);
  std::vector<int> mi(n);
  int xi[8], yi[8];
  for (std::size_t mode = 0; mode < P; ++mode) {
    g.unravel(mode, mi.data());
    Eigen::MatrixXcd sig = Eigen::MatrixXcd::Zero(d, d);
    double k[8];
    for (int a = 0; a < n; ++a) {
      k[a] = 2.0 * pi * (mi[a] - g.sizes[a] / 2 + 0.5) / g.lengths[a];
      sig += cplx(0.0, k[a]) * rep.gammas[a];
    }
    for (std::size_t x = 0; x < P; ++x) {
      g.unravel(x, xi);
      for (std::size_t y = 0; y < P; ++y) {
        g.unravel(y, yi);
        double ph = 0.0;
        for (int a = 0; a < n; ++a)
          ph += k[a] * (xi[a] - yi[a]) * g.spacing(a);
        M.block(x * d, y * d, d, d) += std::polar(1.0 / P, ph) * sig;
      }
    }
  }
  return M;
}

void a1(Verdict &v) {
  double worst = 0.0;
  for (int n = 3; n <= 8; ++n) {
    const auto s = sharp_constants(n);
    // independent closed forms through tgamma
    const double om = 2.0 * std::pow(pi, 0.5 * (n + 1)) / std::tgamma(0.5 * (n + 1));
    const double Kn = 2.0 / n * std::pow(om, -1.0 / n);
    const double K2 = std::sqrt(4.0 / (n * (n - 2.0))) * std::pow(om, -1.0 / n);
    worst = std::max({worst, rel(s.Kn, Kn), rel(std::sqrt((n - 2.0) / n) * *s.K2, s.Kn),
                      rel(*s.K2, K2), rel(s.lam_sphere * s.Kn, 1.0)});
  }
  const auto s3 = sharp_constants(3);
  const double qK = rel(0.246744, s3.Kn), qL = rel(4.05397, s3.lam_sphere);
  v.note << " max rel dev " << worst << "; K(3) = " << s3.Kn << " (quoted 0.246744, rel "
         << qK << "), lambda_min(S^3) = " << s3.lam_sphere << " (quoted 4.05397, rel " << qL << ")";
  v.need(worst <= 1e-13, "closed forms agree to 1e-13");
  v.need(qK <= 5e-4 && qL <= 5e-4, "quoted n=3 values within 5e-4");
}

void a2(Verdict &v) {
  double worst = 0.0;
  for (int n = 3; n <= 10; ++n)
    worst = std::max(worst, std::abs(hijazi_sphere_gap(n)));
  v.note << " max |gap| over n=3..10: " << worst;
  v.need(worst <= 1e-12, "gap <= 1e-12");
}

void a3(Verdict &v) {
  double worst = 0.0;
  for (int n = 1; n <= 6; ++n) {
    const auto rep = build_clifford(n);
    const int d = rep.fiber_dim;
    const auto I = Eigen::MatrixXcd::Identity(d, d);
    for (int j = 0; j < n; ++j) {
      worst = std::max(worst, (rep.gammas[j].adjoint() + rep.gammas[j]).cwiseAbs().maxCoeff());
      for (int k = 0; k < n; ++k) {
        const Eigen::MatrixXcd ac = rep.gammas[j] * rep.gammas[k] + rep.gammas[k] * rep.gammas[j];
        worst = std::max(worst, (ac + 2.0 * (j == k) * I).cwiseAbs().maxCoeff());
      }
    }
    // Clifford multiplication by a vector is skew-adjoint and squares to -|v|^2
    std::vector<double> vec(n);
    for (int j = 0; j < n; ++j)
      vec[j] = 0.3 + 0.1 * j;
    double v2 = 0.0;
    for (double x : vec)
      v2 += x * x;
    const auto C = clifford_matrix(rep, vec);
    worst = std::max({worst, (C + C.adjoint()).cwiseAbs().maxCoeff(),
                      (C * C + v2 * I).cwiseAbs().maxCoeff()});
  }
  v.note << " max defect over n<=6: " << worst;
  v.need(worst <= 1e-14, "relations to 1e-14");
}

void a4(Verdict &v) {
  const auto r = killing_run(3, 128, 8.0);
  v.note << " n=3 radius 8 N=128: max rel ||psi|^2 - f^2| = " << r.mod_err
         << ", rel L2 of D psi - (3/2) f psi in B(delta) = " << r.dirac_err;
  v.need(r.mod_err <= 1e-12, "modulus identity to 1e-12");
  v.need(r.dirac_err <= 1e-5, "Killing equation to 1e-5");
}

void a5(Verdict &v) {
  const double lam = sharp_constants(3).lam_sphere;
  const double radii[3] = {4.0, 8.0, 16.0};
  const int sizes[3] = {64, 128, 192};
  double err[3];
  for (int i = 0; i < 3; ++i) {
    const auto r = killing_run(3, sizes[i], radii[i]);
    err[i] = r.F / lam - 1.0;
    const double quad = radial_killing_quotient(3, 1.0 / radii[i], 0.45);
    v.note << " R=" << radii[i] << " N=" << sizes[i] << ": F=" << r.F << " (rel " << err[i]
           << ", radial quadrature " << quad << ");";
  }
  // where the 1% mark actually falls for delta = 0.45, from the grid-free quadrature
  double R = 16.0;
  while (radial_killing_quotient(3, 1.0 / R, 0.45) / lam - 1.0 > 0.01 && R < 4096.0)
    R *= 1.25;
  v.note << " quadrature reaches 1% near radius " << R;
  v.need(err[0] > err[1] && err[1] > err[2], "monotone improvement");
  v.need(err[2] <= 0.01, "within 1% at radius 16");
}

void a6(Verdict &v) {
  double B[2];
  int k = 0;
  for (int N : {16, 32}) {
    DiracOperator D(GridSpec::cube(3, N, 2.0 * pi), build_clifford(3));
    std::vector<SpinorField> fam;
    for (std::uint64_t s = 0; s < 200; ++s)
      fam.push_back(random_spinor(D, s, 3.0));
    const auto fit = fit_sobolev_budget(D, fam, 0.05);
    B[k++] = fit.B_fit;
    v.note << " N=" << N << ": B_fit=" << fit.B_fit << " B_eps=" << fit.B_eps
           << " violations=" << fit.violations << ";";
    v.need(std::isfinite(fit.B_fit), "finite B");
    v.need(fit.violations == 0, "no violations");
  }
  const double change = std::abs(B[1] - B[0]) / std::abs(B[0]);
  v.note << " relative change " << change;
  v.need(change <= 0.2, "B stable to 20% under N doubling");
}

void a7(Verdict &v) {
  // circle: exhaustive search over psi = e^{-ix/2} + b e^{ix/2}
  auto g1 = GridSpec::cube(1, 16, 2.0 * pi);
  DiracOperator D1(g1, build_clifford(1));
  const double q1 = 1.7;
  double best = INFINITY;
  for (int it = 0; it <= 400; ++it)
    for (int ip = 0; ip < 16; ++ip) {
      const cplx b = std::polar(2.0 * it / 400.0, 2.0 * pi * ip / 16.0);
      SpinorField psi(g1, 1);
      for (std::size_t i = 0; i < g1.points(); ++i) {
        const double x = 2.0 * pi * i / 16.0;
        psi.at(i)[0] = std::polar(1.0, -0.5 * x) + b * std::polar(1.0, 0.5 * x);
      }
      const auto Dpsi = D1.apply(psi);
      if (pairing(Dpsi, psi).real() > 1e-9)
        best = std::min(best, functional_F(Dpsi, psi, nullptr, q1));
    }
  const auto r1 = minimize_subcritical(D1, nullptr, q1);
  v.note << " circle: exhaustive " << best << ", solver " << r1.lambda_q << ";";
  v.need(std::abs(r1.lambda_q - best) <= 1e-4, "1-D oracle to 1e-4");

  DiracOperator D2(GridSpec::cube(2, 16, 1.0), build_clifford(2));
  const auto H = bump_H(D2.grid(), D2.grid().center_index(), 2, 0.3);
  double res = r1.el_residual, cd = r1.constraint_defect, lmin = r1.lambda_q;
  bool all_conv = r1.converged;
  auto qgrid = [](int k) {
    std::vector<double> qs;
    for (int i = 0; i <= k; ++i)
      qs.push_back(1.9 - 0.3 * i / k);
    return qs;
  };
  double jc = 0.0, jf = 0.0;
  for (const ScalarField *h : {static_cast<const ScalarField *>(nullptr), &H}) {
    const auto coarse = lambda_sweep(D2, h, qgrid(3));
    const auto fine = lambda_sweep(D2, h, qgrid(6));
    for (const auto *s : {&coarse, &fine})
      for (const auto &r : *s) {
        all_conv = all_conv && r.converged;
        res = std::max(res, r.el_residual);
        cd = std::max(cd, r.constraint_defect);
        lmin = std::min(lmin, r.lambda_q);
      }
    jc = std::max(jc, max_adjacent_jump(coarse));
    jf = std::max(jf, max_adjacent_jump(fine));
    v.need(max_adjacent_jump(fine) <= 0.75 * max_adjacent_jump(coarse), "continuity under q refinement");
  }
  v.note << " n=2 sweeps q in [1.6, 1.9], H = 1 and bump: max EL residual " << res
         << ", max constraint defect " << cd << ", min lambda " << lmin
         << ", max jump coarse/fine " << jc << "/" << jf;
  v.need(all_conv, "all runs converged");
  v.need(res <= 1e-6, "EL residual <= 1e-6");
  v.need(cd <= 1e-8, "constraint defect <= 1e-8");
  v.need(lmin > 0.0, "lambda_q > 0");
}

void a8(Verdict &v) {
  for (int n : {2, 3}) {
    const double bound = critical_bound(n, 1.0);
    const int N = n == 2 ? 32 : 16;
    // near q_D the iteration slows; lambda is F of an explicit field, an upper bound either way
    const std::vector<double> qs = n == 2 ? std::vector<double>{1.45, 1.4, 1.38, 1.36, 1.35}
                                          : std::vector<double>{1.6, 1.55, 1.53, 1.52, 1.51};
    DiracOperator D(GridSpec::cube(n, N, 1.0), build_clifford(n));
    const auto H = bump_H(D.grid(), D.grid().center_index(), n, 0.3);
    for (const ScalarField *h : {static_cast<const ScalarField *>(nullptr), &H}) {
      const auto sw = lambda_sweep(D, h, qs);
      const auto ex = extrapolate_to_critical(sw, n, 2);
      const double bnd = critical_bound(n, h ? h->max() : 1.0);
      v.note << " n=" << n << (h ? " bump" : " H=1") << ": lambda(" << qs.back() << ")="
             << sw.back().lambda_q << " res " << sw.back().el_residual << ", extrapolated "
             << ex.value << " / bound " << bnd << " = " << ex.value / bnd << ";";
      v.need(ex.value <= 1.05 * bnd, "extrapolation n=" + std::to_string(n));
    }
    // Killing competitor, delta = 0.45 on [0, 2)^n; radius from the quadrature study
    const double radius = n == 2 ? 400.0 : 22.0;
    const int M = n == 2 ? 2560 : 192;
    const auto g = GridSpec::cube(n, M, 2.0);
    const auto Hg = bump_H(g, g.center_index(), n, 0.3);
    DiracOperator Dg(g, build_clifford(n));
    KillingProfile prof;
    prof.n = n;
    prof.eps = 1.0 / radius;
    for (const ScalarField *h : {static_cast<const ScalarField *>(nullptr), &Hg}) {
      const auto ub = upper_bound_estimate(Dg, h, prof);
      v.note << " competitor n=" << n << (h ? " bump" : " H=1") << " radius " << radius
             << " N=" << M << ": " << ub.value << " / " << ub.bound << " = " << ub.ratio << ";";
      v.need(ub.value <= 1.05 * bound, "competitor n=" + std::to_string(n));
    }
  }
}

void a9(Verdict &v) {
  // dense oracle on coarse grids
  double worst = 0.0;
  for (int n : {1, 2}) {
    const auto g = n == 1 ? GridSpec::cube(1, 32, 2.0 * pi) : GridSpec::cube(2, 16, 1.0);
    const auto rep = build_clifford(n);
    DiracOperator D(g, rep);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(dense_dirac(g, rep));
    const auto p = g.center_index();
    const auto ex = green_function(D, p);
    for (int a = 0; a < rep.fiber_dim; ++a) {
      Eigen::VectorXcd src = Eigen::VectorXcd::Zero(g.points() * rep.fiber_dim);
      src[g.ravel(p.data()) * rep.fiber_dim + a] = 1.0 / g.cell_volume();
      const Eigen::VectorXcd want = lu.solve(src);
      const Eigen::Map<const Eigen::VectorXcd> got(ex.G[a].values.data(), ex.G[a].values.size());
      worst = std::max(worst, (got - want).norm() / want.norm());
    }
  }
  v.note << " dense oracle rel err " << worst << ";";
  v.need(worst <= 1e-10, "dense oracle to 1e-10");

  // mass endomorphism: self-adjoint and stable under refinement
  for (int n : {2, 3}) {
    const int N = n == 2 ? 64 : 32;
    DiracOperator Dc(GridSpec::cube(n, N, 2.0), build_clifford(n));
    DiracOperator Df(GridSpec::cube(n, 2 * N, 2.0), build_clifford(n));
    const auto ac = mass_endomorphism(green_function(Dc, Dc.grid().center_index()));
    const auto af = mass_endomorphism(green_function(Df, Df.grid().center_index()));
    const double sa = std::max(self_adjointness_defect(ac), self_adjointness_defect(af));
    const double diff = (af - ac).cwiseAbs().maxCoeff();
    const double scale = af.cwiseAbs().maxCoeff();
    v.note << " n=" << n << " alpha N=" << N << "/" << 2 * N << ": |alpha| " << scale
           << ", sa defect " << sa << ", change " << diff << ";";
    v.need(sa <= 1e-8, "alpha self-adjoint n=" + std::to_string(n));
    v.need(diff <= std::max(1e-3 * scale, 1e-8), "alpha stable n=" + std::to_string(n));
  }

  // three-zone spinor, n = 2, L = 4, eps = 1/8
  auto g = GridSpec::cube(2, 512, 4.0);
  DiracOperator D(g, build_clifford(2));
  auto ex = green_function(D, g.center_index());
  const auto alpha = mass_endomorphism(ex);
  MassSpinorParams prm;
  prm.eps = 0.125;
  prm.psi_p = Eigen::VectorXcd::Unit(2, 0);
  const auto m = mass_test_spinor(D, ex, prm);
  v.note << " zones N=512: outer max |D Phi| " << m.outer_max << ", inner formula rel "
         << m.inner_formula_error << ", theta0 " << m.theta_intercept << ";";
  v.need(m.outer_max <= 1e-8, "outer zone");
  v.need(m.inner_formula_error <= 1e-5, "inner zone");

  // existence clause: alpha = 0 on flat tori, so it only applies to the injected mass
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (alpha + alpha.adjoint()));
  const double top = es.eigenvalues().maxCoeff();
  v.note << " max eig alpha " << top << (top > 1e-8 ? "" : " (clause vacuous)") << ";";
  const std::vector<double> eps_flat{0.125, 0.1, 0.08, 0.0625, 0.05};
  if (top > 1e-8) {
    const auto r = existence_criterion(D, nullptr, ex, eps_flat);
    v.need(r.fitted_mass_coeff < 0.0 &&
               std::abs(r.fitted_mass_coeff - r.predicted_coeff) <= 0.2 * std::abs(r.predicted_coeff),
           "eps^{n-1} coefficient");
  }
  // synthetic mass on a finer grid, where eps down to 0.025 is resolved
  DiracOperator Ds(GridSpec::cube(2, 1024, 4.0), build_clifford(2));
  auto es_ = green_function(Ds, Ds.grid().center_index());
  const double lam = 0.05;
  inject_mass(es_, lam * Eigen::MatrixXcd::Identity(2, 2));
  const auto r = existence_criterion(Ds, nullptr, es_, {0.06, 0.05, 0.04, 0.03, 0.025});
  const double dev = std::abs(r.fitted_mass_coeff - r.predicted_coeff) / std::abs(r.predicted_coeff);
  v.note << " synthetic mass " << lam << " N=1024: fitted " << r.fitted_mass_coeff
         << ", predicted " << r.predicted_coeff << " (rel " << dev << "), -lambda J = "
         << r.quoted_coeff;
  v.need(r.criterion_met && r.fitted_mass_coeff < 0.0 && dev <= 0.2, "synthetic mass coefficient");
}

} // namespace

int main() {
  init_fft_threads();
  run("A1", 1.0, a1);
  run("A2", 1.0, a2);
  run("A3", 1.0, a3);
  run("A4", 120.0, a4);
  run("A5", 600.0, a5);
  run("A6", 600.0, a6);
  run("A7", 300.0, a7);
  run("A8", 900.0, a8);
  run("A9", 1200.0, a9);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
