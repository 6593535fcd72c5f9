#include "spinorlab/green.hpp"
#include <boost/math/special_functions/gamma.hpp>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spinorlab {

namespace {

double radius(const double *d, int n) {
  double r2 = 0.0;
  for (int a = 0; a < n; ++a)
    r2 += d[a] * d[a];
  return std::sqrt(r2);
}

// out = -(x/r^n) . s * weight, zero at r = 0
void singular_model(const CliffordRep &rep, const double *d, double r, const cplx *s,
                    double weight, cplx *out) {
  const int n = rep.n;
  if (r == 0.0) {
    for (int c = 0; c < rep.fiber_dim; ++c)
      out[c] = 0.0;
    return;
  }
  double y[16];
  const double rn = std::pow(r, n);
  for (int a = 0; a < n; ++a)
    y[a] = -d[a] / rn * weight;
  clifford_mul(rep, y, s, out);
}

double min_spacing(const GridSpec &g) {
  double h = INFINITY;
  for (int a = 0; a < g.n; ++a)
    h = std::min(h, g.spacing(a));
  return h;
}

} // namespace

GreenExpansion green_function(const DiracOperator &D, const std::vector<int> &p,
                              const GreenOptions &opts) {
  const GridSpec &g = D.grid();
  const CliffordRep &rep = D.rep();
  const int n = g.n, d = rep.fiber_dim;
  if (!D.invertible())
    throw std::domain_error("green_function: spin structure has a zero mode");
  if (static_cast<int>(p.size()) != n)
    throw std::invalid_argument("green_function: base point must be a grid index");
  for (int a = 0; a < n; ++a)
    if (p[a] < 0 || p[a] >= g.sizes[a])
      throw std::invalid_argument("green_function: base point off the grid");

  GreenExpansion ex;
  ex.grid = g;
  ex.p = p;
  const double minL = *std::min_element(g.lengths.begin(), g.lengths.end());
  ex.sing_radius = opts.sing_radius > 0.0 ? opts.sing_radius : 0.25 * minL;
  double knyq = INFINITY;
  for (int a = 0; a < n; ++a)
    knyq = std::min(knyq, std::numbers::pi * g.sizes[a] / g.lengths[a]);
  const double sigma_min = opts.sigma_k2 / (knyq * knyq);
  const int L = std::max(1, opts.sigma_levels);
  for (int j = 0; j < L; ++j)
    ex.sigma_schedule.push_back(sigma_min * std::pow(2.0, L - 1 - j));

  // Richardson weights: sum c_j sigma_j^m = [m == 0], m < L
  Eigen::MatrixXd V(L, L);
  for (int m = 0; m < L; ++m)
    for (int j = 0; j < L; ++j)
      V(m, j) = std::pow(ex.sigma_schedule[j] / sigma_min, m);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(L);
  rhs[0] = 1.0;
  const Eigen::VectorXd cw = V.colPivHouseholderQr().solve(rhs);

  const double omega = omega_n(n - 1);
  const double dV = g.cell_volume();
  const std::size_t P = g.points();
  const std::size_t ip = g.ravel(p.data());
  double disp[16];
  std::vector<cplx> tmp(d);

  for (int col = 0; col < d; ++col) {
    SpinorField src(g, rep);
    src.at(ip)[col] = 1.0 / dV;
    ex.G.push_back(D.invert(src));
    const SpinorField &G = ex.G.back();

    SpinorField v(g, rep);
    std::vector<cplx> e(d, 0.0);
    e[col] = 1.0;
    for (std::size_t i = 0; i < P; ++i) {
      g.displacement(i, p, disp);
      const double r = radius(disp, n);
      if (r < ex.sing_radius)
        continue;
      singular_model(rep, disp, r, e.data(), -g.image_sign(i, p), tmp.data());
      for (int c = 0; c < d; ++c)
        v.at(i)[c] = omega * G.at(i)[c] + tmp[c];
    }
    for (int j = 0; j < L; ++j) {
      const double sigma = ex.sigma_schedule[j];
      SpinorField Gs = D.apply_multiplier(
          src, [&](const double *k, double kabs, const cplx *in, cplx *out) {
            clifford_mul(rep, k, in, out);
            const cplx s(0.0, std::exp(-sigma * kabs * kabs) / (kabs * kabs));
            for (int c = 0; c < d; ++c)
              out[c] *= s;
          });
      for (std::size_t i = 0; i < P; ++i) {
        g.displacement(i, p, disp);
        const double r = radius(disp, n);
        if (r >= ex.sing_radius)
          continue;
        const double Pn = r > 0.0 ? boost::math::gamma_p(0.5 * n, r * r / (4.0 * sigma)) : 0.0;
        singular_model(rep, disp, r, e.data(), -Pn * g.image_sign(i, p), tmp.data());
        for (int c = 0; c < d; ++c)
          v.at(i)[c] += cw[j] * (omega * Gs.at(i)[c] + tmp[c]);
      }
    }
    ex.v_field.push_back(std::move(v));
  }

  // alpha: even part of v near p, quadratic in r, read off at r = 0
  const double h = min_spacing(g);
  ex.alpha = Eigen::MatrixXcd::Zero(d, d);
  ex.alpha_at_pole = Eigen::MatrixXcd::Zero(d, d);
  std::vector<std::size_t> pts;
  std::vector<double> rs;
  int idx[16], mir[16];
  for (std::size_t i = 0; i < P; ++i) {
    g.displacement(i, p, disp);
    const double r = radius(disp, n);
    if (r > 0.0 && r <= 3.5 * h) {
      pts.push_back(i);
      rs.push_back(r);
    }
  }
  Eigen::MatrixXd A(pts.size(), 3);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    A(k, 0) = 1.0;
    A(k, 1) = rs[k];
    A(k, 2) = rs[k] * rs[k];
  }
  const auto qr = A.colPivHouseholderQr();
  for (int col = 0; col < d; ++col) {
    const SpinorField &v = ex.v_field[col];
    for (int c = 0; c < d; ++c) {
      ex.alpha_at_pole(c, col) = v.at(ip)[c];
      Eigen::VectorXd br(pts.size()), bi(pts.size());
      for (std::size_t k = 0; k < pts.size(); ++k) {
        g.unravel(pts[k], idx);
        for (int a = 0; a < n; ++a)
          mir[a] = 2 * p[a] - idx[a];
        const std::size_t j = g.ravel(mir);
        const cplx even = 0.5 * (g.image_sign(pts[k], p) * v.at(pts[k])[c] +
                                 g.image_sign(j, p) * v.at(j)[c]);
        br[k] = even.real();
        bi[k] = even.imag();
      }
      ex.alpha(c, col) = cplx(qr.solve(br)[0], qr.solve(bi)[0]);
    }
  }
  return ex;
}

Eigen::MatrixXcd mass_endomorphism(const GreenExpansion &exp) { return exp.alpha; }

double self_adjointness_defect(const Eigen::MatrixXcd &alpha) {
  return (alpha - alpha.adjoint()).cwiseAbs().maxCoeff();
}

double harmonicity_defect(const DiracOperator &D, const GreenExpansion &exp) {
  const GridSpec &g = D.grid();
  const double rs = exp.sing_radius;
  double disp[16], worst = 0.0;
  for (const auto &v : exp.v_field) {
    SpinorField w(g, v.fiber);
    std::vector<char> inside(g.points(), 0);
    for (std::size_t i = 0; i < g.points(); ++i) {
      g.displacement(i, exp.p, disp);
      const double r = radius(disp, g.n);
      const double chi = cutoff_eta(r, 0.5 * rs);
      inside[i] = r <= 0.5 * rs;
      for (int c = 0; c < v.fiber; ++c)
        w.at(i)[c] = chi * v.at(i)[c];
    }
    const SpinorField Dw = D.apply(w);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g.points(); ++i) {
      if (!inside[i])
        continue;
      num += Dw.norm2_at(i);
      den += w.norm2_at(i);
    }
    if (den > 0.0)
      worst = std::max(worst, std::sqrt(num / den) * rs);
  }
  return worst;
}

double MassSpinorParams::xi(int n) const { return std::pow(eps, 1.0 / (n + 1)); }

double MassSpinorParams::eps0(int n) const {
  const double x = xi(n);
  return std::pow(x, n) / eps * std::pow(conformal_factor(x * x / (eps * eps)), 0.5 * n);
}

MassSpinor mass_test_spinor(const DiracOperator &D, const GreenExpansion &exp,
                            const MassSpinorParams &params) {
  const GridSpec &g = D.grid();
  const CliffordRep &rep = D.rep();
  const int n = g.n, d = rep.fiber_dim;
  if (!(g == exp.grid))
    throw std::invalid_argument("mass_test_spinor: expansion built on another grid");
  if (!(params.eps > 0.0))
    throw std::invalid_argument("mass_test_spinor: eps must be positive");
  if (params.psi_p.size() != d || std::abs(params.psi_p.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("mass_test_spinor: psi_p must be a unit fiber vector");
  const double eps = params.eps, xi = params.xi(n), e0 = params.eps0(n);
  const double minL = *std::min_element(g.lengths.begin(), g.lengths.end());
  const double deltaK = 0.24 * minL;
  if (2.0 * xi > exp.sing_radius || xi > deltaK)
    throw std::invalid_argument("mass_test_spinor: 2 xi must stay inside the singular chart");
  const double s = 0.5 * std::numbers::sqrt2;
  const double omega = omega_n(n - 1);
  const double fxi = std::pow(conformal_factor(xi * xi / (eps * eps)), 0.5 * n);
  const Eigen::VectorXcd &psi = params.psi_p;
  const Eigen::VectorXcd apsi = exp.alpha * psi;

  SpinorField Gpsi(g, rep), vpsi(g, rep);
  for (int col = 0; col < d; ++col) {
    if (psi[col] == 0.0)
      continue;
    for (std::size_t j = 0; j < Gpsi.values.size(); ++j) {
      Gpsi.values[j] += psi[col] * exp.G[col].values[j];
      vpsi.values[j] += psi[col] * exp.v_field[col].values[j];
    }
  }
  const SpinorField DG = D.apply(Gpsi);

  SpinorField K(g, rep);
  double disp[16], y[16];
  const std::size_t P = g.points();
  for (std::size_t i = 0; i < P; ++i) {
    g.displacement(i, exp.p, disp);
    const double eta = cutoff_eta(radius(disp, n), deltaK);
    if (eta == 0.0)
      continue;
    for (int a = 0; a < n; ++a)
      y[a] = disp[a] / eps;
    killing_value(rep, y, psi.data(), K.at(i));
    const double w = eta * g.image_sign(i, exp.p);
    for (int c = 0; c < d; ++c)
      K.at(i)[c] *= w;
  }
  const SpinorField DK = D.apply(K);

  MassSpinor m;
  m.field = SpinorField(g, rep);
  m.dirac = SpinorField(g, rep);
  m.zone.assign(P, 0);
  std::vector<cplx> inner(d), middle(d), outer(d), tmp(d), theta(d), wG(d);

  // everything below is in the frame at p; sg converts stored values
  double sg = 1.0;
  auto eval = [&](std::size_t i, const double *x, double r) {
    // inner formula
    for (int a = 0; a < n; ++a)
      y[a] = x[a] / eps;
    killing_value(rep, y, psi.data(), inner.data());
    for (int c = 0; c < d; ++c)
      inner[c] += s * e0 * apsi[c];
    // omega G near p in continuum form, raw table outside the chart
    if (r < exp.sing_radius) {
      singular_model(rep, x, r, psi.data(), 1.0, tmp.data());
      for (int c = 0; c < d; ++c)
        wG[c] = tmp[c] + sg * vpsi.at(i)[c];
    } else {
      for (int c = 0; c < d; ++c)
        wG[c] = sg * omega * Gpsi.at(i)[c];
    }
    const double eta = cutoff_eta(r, xi);
    for (int c = 0; c < d; ++c) {
      theta[c] = sg * vpsi.at(i)[c] - apsi[c];
      middle[c] = s * (e0 * (wG[c] - eta * theta[c]) + eta * fxi * psi[c]);
      outer[c] = s * e0 * wG[c];
    }
  };

  const double h = min_spacing(g);
  double shell_in = 0.0, shell_in_max = 0.0, shell_out = 0.0, shell_out_max = 0.0;
  double num = 0.0, den = 0.0, sup_err = 0.0, sup_t = 0.0;
  const double qD = ExponentPair::critical_for(n).q;
  std::vector<double> th_x;
  std::vector<cplx> th_v;
  for (std::size_t i = 0; i < P; ++i) {
    g.displacement(i, exp.p, disp);
    const double r = radius(disp, n);
    sg = g.image_sign(i, exp.p);
    eval(i, disp, r);
    cplx *F = m.field.at(i), *DF = m.dirac.at(i);
    if (r <= xi) {
      m.zone[i] = 0;
      for (int c = 0; c < d; ++c) {
        F[c] = inner[c];
        DF[c] = sg * DK.at(i)[c];
      }
      const double A = std::pow(m.dirac.norm2_at(i), 0.5 * qD);
      const double T = std::pow(0.5 * n / eps, qD) *
                       std::pow(conformal_factor(r * r / (eps * eps)), n);
      num += (A - T) * (A - T);
      den += T * T;
      sup_err = std::max(sup_err, std::abs(A - T));
      sup_t = std::max(sup_t, T);
    } else if (r < 2.0 * xi) {
      m.zone[i] = 1;
      const double deta = cutoff_eta_derivative(r, xi);
      for (int a = 0; a < n; ++a)
        y[a] = deta * disp[a] / r;
      std::vector<cplx> w(d);
      for (int c = 0; c < d; ++c) {
        F[c] = middle[c];
        w[c] = s * (fxi * psi[c] - e0 * theta[c]);
      }
      clifford_mul(rep, y, w.data(), DF);
    } else {
      m.zone[i] = 2;
      for (int c = 0; c < d; ++c) {
        F[c] = outer[c];
        DF[c] = sg * s * e0 * omega * DG.at(i)[c];
      }
      m.outer_max = std::max(m.outer_max, std::sqrt(m.dirac.norm2_at(i)));
    }
    if (sg < 0.0) // back to the stored section
      for (int c = 0; c < d; ++c) {
        F[c] = -F[c];
        DF[c] = -DF[c];
      }
    if (std::abs(r - xi) <= 0.5 * h) {
      for (int c = 0; c < d; ++c) {
        shell_in = std::max(shell_in, std::abs(inner[c] - middle[c]));
        shell_in_max = std::max(shell_in_max, std::abs(inner[c]));
      }
    }
    if (std::abs(r - 2.0 * xi) <= 0.5 * h) {
      for (int c = 0; c < d; ++c) {
        shell_out = std::max(shell_out, std::abs(middle[c] - outer[c]));
        shell_out_max = std::max(shell_out_max, std::abs(outer[c]));
      }
    }
    if (r <= 2.0 * h) {
      th_x.insert(th_x.end(), disp, disp + n);
      th_v.insert(th_v.end(), theta.begin(), theta.end());
    }
  }
  m.jump_inner = shell_in_max > 0.0 ? shell_in / shell_in_max : shell_in;
  m.jump_outer = shell_out_max > 0.0 ? shell_out / shell_out_max : shell_out;
  m.inner_formula_error = den > 0.0 ? std::sqrt(num / den) : 0.0;
  m.inner_formula_sup = sup_t > 0.0 ? sup_err / sup_t : 0.0;
  // affine fit theta(x) ~ theta0 + sum_a x_a B_a per component; the
  // direction dependence of the linear part stays out of the intercept
  const std::size_t nfit = th_x.size() / n;
  Eigen::MatrixXd A(nfit, n + 1);
  for (std::size_t k = 0; k < nfit; ++k) {
    A(k, 0) = 1.0;
    for (int a = 0; a < n; ++a)
      A(k, a + 1) = th_x[k * n + a];
  }
  const auto qr = A.colPivHouseholderQr();
  double t0 = 0.0;
  for (int c = 0; c < d; ++c) {
    Eigen::VectorXd br(nfit), bi(nfit);
    for (std::size_t k = 0; k < nfit; ++k) {
      br[k] = th_v[k * d + c].real();
      bi[k] = th_v[k * d + c].imag();
    }
    t0 += std::norm(cplx(qr.solve(br)[0], qr.solve(bi)[0]));
  }
  m.theta_intercept = std::sqrt(t0);
  return m;
}

double mass_functional(const MassSpinor &m, const ScalarField *H, int n) {
  return functional_F(m.dirac, m.field, H, ExponentPair::critical_for(n).q);
}

void inject_mass(GreenExpansion &exp, const Eigen::MatrixXcd &m) {
  const GridSpec &g = exp.grid;
  const int d = static_cast<int>(exp.v_field.size());
  if (m.rows() != d || m.cols() != d)
    throw std::invalid_argument("inject_mass: matrix does not match the fiber");
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("inject_mass: mass must be Hermitian");
  double disp[16];
  for (std::size_t i = 0; i < g.points(); ++i) {
    g.displacement(i, exp.p, disp);
    if (radius(disp, g.n) >= exp.sing_radius)
      continue;
    for (int col = 0; col < d; ++col)
      for (int c = 0; c < d; ++c)
        exp.v_field[col].at(i)[c] += m(c, col);
  }
  exp.alpha += m;
  exp.alpha_at_pole += m;
}

double fit_eps_coefficient(const std::vector<double> &eps, const std::vector<double> &y,
                           int n) {
  if (eps.size() != y.size() || eps.size() < 2)
    throw std::invalid_argument("fit_eps_coefficient: need >= 2 matching samples");
  Eigen::MatrixXd A(eps.size(), 2);
  Eigen::VectorXd b(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    A(i, 0) = std::pow(eps[i], n - 1);
    A(i, 1) = std::pow(eps[i], n - 1 + 1.0 / (n + 1)); // gluing remainder eps^{n-1} xi
    b[i] = y[i];
  }
  return A.colPivHouseholderQr().solve(b)[0];
}

ExistenceResult existence_criterion(const DiracOperator &D, const ScalarField *H,
                                    const GreenExpansion &exp,
                                    const std::vector<double> &eps_sweep) {
  const int n = D.n();
  ExistenceResult res;
  double Hmax = 1.0;
  if (H) {
    Hmax = H->max();
    if (H->values[D.grid().ravel(exp.p.data())] < Hmax * (1.0 - 1e-12))
      throw std::invalid_argument("existence_criterion: H is not maximal at the pole");
  }
  res.bound = critical_bound(n, Hmax);
  const Eigen::MatrixXcd herm = 0.5 * (exp.alpha + exp.alpha.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm);
  const int top = static_cast<int>(herm.rows()) - 1;
  res.alpha_max_eigenvalue = es.eigenvalues()[top];
  Eigen::VectorXcd psi = es.eigenvectors().col(top);
  psi /= psi.norm();
  res.quoted_coeff = -res.alpha_max_eigenvalue * moments(n).J;
  // pairing gains (n/2eps) (1/2) eps0 lambda eps^n J over the main (n/2eps) eps^n omega_n,
  // with eps0 ~ 2^{n/2} eps^{n-1}
  res.predicted_coeff = std::pow(2.0, 0.5 * n - 1.0) * res.quoted_coeff / omega_n(n);

  for (double e : eps_sweep) {
    MassSpinorParams prm{e, psi};
    const MassSpinor m = mass_test_spinor(D, exp, prm);
    const double F = mass_functional(m, H, n);
    res.eps.push_back(e);
    res.lambda_estimates.push_back(F);
    res.ratios.push_back(F / res.bound);
  }
  if (res.eps.size() >= 2) {
    std::vector<double> y;
    for (double r : res.ratios)
      y.push_back(r - 1.0);
    res.fitted_mass_coeff = fit_eps_coefficient(res.eps, y, n);
  }
  const double scale = std::max(1.0, exp.alpha.cwiseAbs().maxCoeff());
  if (!(res.alpha_max_eigenvalue > 1e-8 * scale)) {
    res.criterion_met = false;
    res.explanation = "mass endomorphism has no positive eigenvalue (largest = " +
                      std::to_string(res.alpha_max_eigenvalue) + ")";
  } else {
    res.criterion_met = res.fitted_mass_coeff < 0.0;
    res.explanation = res.criterion_met ? "negative eps^(n-1) coefficient"
                                        : "fitted eps^(n-1) coefficient is not negative";
  }
  return res;
}

} // namespace spinorlab
