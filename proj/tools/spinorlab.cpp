// spinorlab: batch driver for the numerical experiments. One subcommand per run;
// every run writes CSV/JSON artifacts atomically plus a <out>.manifest.json.
#include "spinorlab/green.hpp"
#include "spinorlab/io.hpp"
#include "spinorlab/variational.hpp"
#include <CLI11.hpp>
#include <json.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace spinorlab;
using json = nlohmann::json;
namespace fs = std::filesystem;

#ifndef SPINORLAB_VERSION
#define SPINORLAB_VERSION "unknown"
#endif

namespace {

constexpr int exit_config = 2, exit_nonconv = 3, exit_missing = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OptSpec {
  std::string name, def, help;
};

// Merged view of defaults, config file and command line, in increasing priority.
class Params {
public:
  std::map<std::string, std::string> values;

  const std::string &str(const std::string &k) const {
    const auto it = values.find(k);
    if (it == values.end() || it->second.empty())
      throw ConfigError("missing value for " + k);
    return it->second;
  }
  bool has(const std::string &k) const {
    const auto it = values.find(k);
    return it != values.end() && !it->second.empty();
  }
  double num(const std::string &k) const {
    const std::string &s = str(k);
    std::size_t used = 0;
    double x;
    try {
      x = std::stod(s, &used);
    } catch (const std::exception &) {
      throw ConfigError(k + ": not a number: " + s);
    }
    if (used != s.size() || !std::isfinite(x))
      throw ConfigError(k + ": not a number: " + s);
    return x;
  }
  int integer(const std::string &k) const {
    const double x = num(k);
    if (x != std::floor(x) || std::abs(x) > 1e9)
      throw ConfigError(k + ": not an integer: " + str(k));
    return static_cast<int>(x);
  }
  // comma list, or start:stop:step with the endpoint included when hit
  std::vector<double> list(const std::string &k) const {
    const std::string &s = str(k);
    std::vector<double> out;
    auto parse = [&](const std::string &t) {
      Params p;
      p.values[k] = t;
      return p.num(k);
    };
    if (s.find(':') != std::string::npos) {
      std::vector<std::string> parts;
      std::stringstream ss(s);
      for (std::string t; std::getline(ss, t, ':');)
        parts.push_back(t);
      if (parts.size() != 3)
        throw ConfigError(k + ": range must be start:stop:step");
      const double a = parse(parts[0]), b = parse(parts[1]), h = std::abs(parse(parts[2]));
      if (h == 0.0)
        throw ConfigError(k + ": zero step");
      const double dir = b >= a ? 1.0 : -1.0;
      const int count = static_cast<int>(std::floor(std::abs(b - a) / h + 1e-9));
      // snap to 12 decimals so 1.9:1.45:0.05 yields 1.8, not 1.7999999999999998
      for (int i = 0; i <= count; ++i)
        out.push_back(std::round((a + dir * i * h) * 1e12) / 1e12);
      return out;
    }
    std::stringstream ss(s);
    for (std::string t; std::getline(ss, t, ',');)
      out.push_back(parse(t));
    return out;
  }
  std::vector<int> int_list(const std::string &k) const {
    std::vector<int> out;
    for (double x : list(k)) {
      if (x != std::floor(x))
        throw ConfigError(k + ": expected integers");
      out.push_back(static_cast<int>(x));
    }
    return out;
  }
  std::uint64_t seed() const {
    if (!has("seed"))
      throw ConfigError("seed is required for randomized families");
    const double s = num("seed");
    if (s < 0 || s != std::floor(s))
      throw ConfigError("seed must be a non-negative integer");
    return static_cast<std::uint64_t>(s);
  }
};

struct Command {
  std::string name, help;
  std::vector<OptSpec> opts;
  std::function<int(const Params &, json &)> run;
  std::function<std::string(const Params &)> plan; // dry-run footprint
};

std::string now_iso() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_json(const fs::path &p, const json &j) { atomic_write(p, j.dump(2) + "\n"); }

fs::path sidecar(const fs::path &out, const std::string &ext) {
  auto p = out;
  p.replace_extension(ext);
  return p;
}

int fiber_of(int n) { return 1 << (n / 2); }

std::string footprint(int n, int N, int fields) {
  const double pts = std::pow(static_cast<double>(N), n);
  const double per = pts * fiber_of(n) * 16.0 / (1 << 20);
  std::ostringstream os;
  os << "grid " << N << "^" << n << " = " << static_cast<long long>(pts) << " points, fiber "
     << fiber_of(n) << ", " << per << " MiB per spinor field, ~" << per * fields
     << " MiB planned (" << fields << " fields)";
  return os.str();
}

ScalarField make_H(const Params &P, const GridSpec &g, int n) {
  const std::string kind = P.str("H");
  if (kind == "const")
    return ScalarField(g, 1.0);
  if (kind == "bump")
    return bump_H(g, g.center_index(), n, P.num("depth"));
  throw ConfigError("H must be const or bump");
}

void check_n(int n, int lo, int hi) {
  if (n < lo || n > hi)
    throw ConfigError("n must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

double clifford_defect(int n) {
  const auto rep = build_clifford(n);
  const auto I = Eigen::MatrixXcd::Identity(rep.fiber_dim, rep.fiber_dim);
  double w = 0.0;
  for (int j = 0; j < n; ++j) {
    w = std::max(w, (rep.gammas[j] + rep.gammas[j].adjoint()).cwiseAbs().maxCoeff());
    for (int k = 0; k < n; ++k)
      w = std::max(w, (rep.gammas[j] * rep.gammas[k] + rep.gammas[k] * rep.gammas[j] +
                       2.0 * (j == k) * I)
                          .cwiseAbs()
                          .maxCoeff());
  }
  return w;
}

// ---- subcommands

int cmd_constants(const Params &P, json &art) {
  const int lo = P.integer("nmin"), hi = P.integer("nmax");
  if (lo < 3 || hi < lo || hi > 12)
    throw ConfigError("need 3 <= nmin <= nmax <= 12");
  CsvTable t({"n", "omega", "K2", "Kn", "Kn_from_K2", "lam_sphere", "lam_hemisphere",
              "yamabe", "hijazi_gap", "clifford_defect"});
  for (int n = lo; n <= hi; ++n) {
    const auto s = sharp_constants(n);
    t.add({std::to_string(n), fmt(s.omega), fmt(*s.K2), fmt(s.Kn),
           fmt(std::sqrt((n - 2.0) / n) * *s.K2), fmt(s.lam_sphere), fmt(s.lam_hemisphere),
           fmt(yamabe_sphere(n)), fmt(hijazi_sphere_gap(n)),
           n <= default_max_clifford_dim ? fmt(clifford_defect(n)) : ""});
  }
  atomic_write(P.str("out"), t.str());
  art.push_back(P.str("out"));
  return 0;
}

struct SharpRow {
  double F, modulus_err, killing_err, seam;
};

SharpRow sharp_row(int n, int N, double L, double eps, double delta) {
  const auto g = GridSpec::cube(n, N, L);
  const auto rep = build_clifford(n);
  DiracOperator D(g, rep);
  KillingProfile prof;
  prof.n = n;
  prof.eps = eps;
  prof.delta = delta;
  const auto psi = killing_spinor(rep, g, prof);
  const auto Dpsi = D.apply(psi);
  const auto c = g.center_index();
  SharpRow r{functional_F(Dpsi, psi, nullptr, ExponentPair::critical_for(n).q), 0.0, 0.0,
             seam_error(psi)};
  double d[16], num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g.points(); ++i) {
    g.displacement(i, c, d);
    double r2 = 0.0;
    for (int a = 0; a < n; ++a)
      r2 += d[a] * d[a];
    if (std::sqrt(r2) > delta)
      continue;
    const double f = conformal_factor(r2 / (eps * eps)), fn1 = std::pow(f, n - 1);
    r.modulus_err = std::max(r.modulus_err, std::abs(psi.norm2_at(i) - fn1) / fn1);
    for (int k = 0; k < rep.fiber_dim; ++k) {
      const cplx want = 0.5 * n / eps * f * psi.at(i)[k];
      num += std::norm(Dpsi.at(i)[k] - want);
      den += std::norm(want);
    }
  }
  r.killing_err = std::sqrt(num / den);
  return r;
}

int cmd_sharp(const Params &P, json &art) {
  const int n = P.integer("n");
  check_n(n, 2, 6);
  const auto radii = P.list("radius");
  auto Ns = P.int_list("N");
  if (Ns.size() == 1)
    Ns.assign(radii.size(), Ns[0]);
  if (Ns.size() != radii.size())
    throw ConfigError("N takes one value or one per radius");
  const double L = P.num("L"), delta = P.num("delta");
  const double lam = sharp_constants(n).lam_sphere;
  CsvTable t({"n", "radius", "eps", "N", "L", "delta", "F", "lam_sphere", "rel_err",
              "radial_quadrature", "modulus_err", "killing_err", "seam_error"});
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0))
      throw ConfigError("radius must be positive");
    const double eps = 1.0 / radii[i];
    const auto r = sharp_row(n, Ns[i], L, eps, delta);
    t.add({std::to_string(n), fmt(radii[i]), fmt(eps), std::to_string(Ns[i]), fmt(L), fmt(delta),
           fmt(r.F), fmt(lam), fmt(r.F / lam - 1.0), fmt(radial_killing_quotient(n, eps, delta)),
           fmt(r.modulus_err), fmt(r.killing_err), fmt(r.seam)});
  }
  atomic_write(P.str("out"), t.str());
  art.push_back(P.str("out"));
  return 0;
}

int cmd_sobolev(const Params &P, json &art) {
  const int n = P.integer("n");
  check_n(n, 2, 5);
  const auto Ns = P.int_list("N");
  const double L = P.num("L"), eps = P.num("eps"), modes = P.num("modes");
  const int samples = P.integer("samples");
  if (samples < 1)
    throw ConfigError("samples must be positive");
  const std::uint64_t seed = P.seed();
  const std::string hn = P.str("halfnorm");
  if (hn != "printed" && hn != "squared")
    throw ConfigError("halfnorm must be printed or squared");
  const HalfNorm mode = hn == "printed" ? HalfNorm::printed : HalfNorm::squared;
  CsvTable summary({"n", "N", "L", "eps", "samples", "B_fit", "B_eps", "violations",
                    "max_half_norm"});
  CsvTable detail({"N", "seed", "lhs", "dirac_term", "mass_term", "half_norm", "slack"});
  for (int N : Ns) {
    DiracOperator D(GridSpec::cube(n, N, L), build_clifford(n));
    std::vector<SpinorField> fam;
    for (int s = 0; s < samples; ++s)
      fam.push_back(random_spinor(D, seed + s, modes));
    const auto fit = fit_sobolev_budget(D, fam, eps);
    double hmax = 0.0;
    for (int s = 0; s < samples; ++s) {
      const double h = spectral_half_norm(D, fam[s], mode);
      hmax = std::max(hmax, h);
      SobolevBudget b = fit.samples[s];
      b.B_eps = fit.B_eps;
      detail.add({std::to_string(N), std::to_string(seed + s), fmt(b.lhs), fmt(b.dirac_term),
                  fmt(b.mass_term), fmt(h), fmt(b.slack())});
    }
    summary.add({std::to_string(n), std::to_string(N), fmt(L), fmt(eps), std::to_string(samples),
                 fmt(fit.B_fit), fmt(fit.B_eps), std::to_string(fit.violations), fmt(hmax)});
  }
  const fs::path out = P.str("out");
  auto det = out;
  det.replace_filename(out.stem().string() + "_samples.csv");
  atomic_write(out, summary.str());
  atomic_write(det, detail.str());
  art.push_back(out.string());
  art.push_back(det.string());
  return 0;
}

int cmd_sweep(const Params &P, json &art) {
  const int n = P.integer("n");
  check_n(n, 1, 4);
  const auto g = GridSpec::cube(n, P.integer("N"), P.num("L"));
  DiracOperator D(g, build_clifford(n));
  const auto Hf = make_H(P, g, n);
  const ScalarField *H = P.str("H") == "const" ? nullptr : &Hf;
  SolverOptions opts;
  opts.tolerance = P.num("tol");
  opts.max_iter = P.integer("max_iter");
  const auto qs = P.list("q");
  const auto sw = lambda_sweep(D, H, qs, opts);
  CsvTable t({"q", "p", "lambda_q", "el_residual", "constraint_defect", "ipr", "iterations",
              "converged", "competitor"});
  bool all = true;
  for (const auto &r : sw) {
    all = all && r.converged;
    t.add({fmt(r.q), fmt(r.p), fmt(r.lambda_q), fmt(r.el_residual), fmt(r.constraint_defect),
           fmt(r.ipr), std::to_string(r.iterations), r.converged ? "1" : "0", fmt(r.competitor)});
  }
  const fs::path out = P.str("out");
  atomic_write(out, t.str());
  art.push_back(out.string());
  json s;
  s["n"] = n;
  s["H"] = P.str("H");
  s["all_converged"] = all;
  s["max_adjacent_jump"] = max_adjacent_jump(sw);
  s["bound"] = critical_bound(n, H ? H->max() : 1.0);
  const int pts = P.integer("points");
  if (n >= 2 && static_cast<int>(sw.size()) >= pts) {
    const auto ex = extrapolate_to_critical(sw, n, pts);
    s["extrapolated"] = ex.value;
    s["slope"] = ex.slope;
    s["points"] = ex.points;
    s["nontrivial"] = nontriviality_check(ex.value, H, n, P.num("margin"));
  }
  write_json(sidecar(out, ".json"), s);
  art.push_back(sidecar(out, ".json").string());
  return all ? 0 : exit_nonconv;
}

int cmd_upperbound(const Params &P, json &art) {
  const int n = P.integer("n");
  check_n(n, 2, 6);
  const double radius = P.num("radius");
  const int N = P.integer("N");
  const auto g = GridSpec::cube(n, N, P.num("L"));
  DiracOperator D(g, build_clifford(n));
  const auto Hf = make_H(P, g, n);
  const ScalarField *H = P.str("H") == "const" ? nullptr : &Hf;
  KillingProfile prof;
  prof.n = n;
  prof.eps = 1.0 / radius;
  prof.delta = P.num("delta");
  const auto ub = upper_bound_estimate(D, H, prof);
  CsvTable t({"n", "radius", "eps", "N", "H", "value", "bound", "ratio", "seam_error"});
  t.add({std::to_string(n), fmt(radius), fmt(prof.eps), std::to_string(N), P.str("H"),
         fmt(ub.value), fmt(ub.bound), fmt(ub.ratio), fmt(ub.seam_error)});
  atomic_write(P.str("out"), t.str());
  art.push_back(P.str("out"));
  return 0;
}

json complex_matrix(const Eigen::MatrixXcd &m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      a.push_back({m(i, j).real(), m(i, j).imag()});
  return a;
}

int cmd_green(const Params &P, json &art) {
  const int n = P.integer("n");
  check_n(n, 1, 4);
  const int N = P.integer("N");
  const double L = P.num("L");
  GreenOptions go;
  go.sing_radius = P.num("sing_radius");
  DiracOperator D(GridSpec::cube(n, N, L), build_clifford(n));
  const auto ex = green_function(D, D.grid().center_index(), go);
  const auto alpha = mass_endomorphism(ex);
  const fs::path dir = P.str("out");
  fs::create_directories(dir);
  for (std::size_t a = 0; a < ex.G.size(); ++a) {
    const auto gp = dir / ("G_" + std::to_string(a) + ".spf");
    const auto vp = dir / ("v_" + std::to_string(a) + ".spf");
    write_spf1(gp, ex.G[a]);
    write_spf1(vp, ex.v_field[a]);
    art.push_back(gp.string());
    art.push_back(vp.string());
  }
  json s;
  s["p"] = ex.p;
  s["sing_radius"] = ex.sing_radius;
  s["alpha"] = complex_matrix(alpha);
  s["sigma_schedule"] = ex.sigma_schedule;
  s["alpha_at_pole"] = complex_matrix(ex.alpha_at_pole);
  s["alpha_self_adjoint_defect"] = self_adjointness_defect(alpha);
  s["harmonicity_defect"] = harmonicity_defect(D, ex);
  if (P.integer("refine")) {
    DiracOperator D2(GridSpec::cube(n, 2 * N, L), build_clifford(n));
    const auto a2 = mass_endomorphism(green_function(D2, D2.grid().center_index(), go));
    s["alpha_refined"] = complex_matrix(a2);
    s["alpha_refined_change"] = (a2 - alpha).cwiseAbs().maxCoeff();
    s["alpha_refined_scale"] = a2.cwiseAbs().maxCoeff();
  }
  write_json(dir / "green.json", s);
  art.push_back((dir / "green.json").string());
  return 0;
}

GreenExpansion green_with_mass(const DiracOperator &D, const Params &P) {
  auto ex = green_function(D, D.grid().center_index());
  const double m = P.num("inject");
  if (m != 0.0)
    inject_mass(ex, m * Eigen::MatrixXcd::Identity(D.fiber(), D.fiber()));
  return ex;
}

int cmd_mass(const Params &P, json &art) {
  const int n = P.integer("n");
  check_n(n, 2, 3);
  const auto g = GridSpec::cube(n, P.integer("N"), P.num("L"));
  DiracOperator D(g, build_clifford(n));
  const auto ex = green_with_mass(D, P);
  MassSpinorParams prm;
  prm.eps = P.num("eps");
  const int comp = P.integer("component");
  if (comp < 0 || comp >= D.fiber())
    throw ConfigError("component outside the fiber");
  prm.psi_p = Eigen::VectorXcd::Unit(D.fiber(), comp);
  const auto m = mass_test_spinor(D, ex, prm);
  const double F = mass_functional(m, nullptr, n), bound = critical_bound(n);
  CsvTable t({"n", "N", "L", "eps", "xi", "eps0", "F", "bound", "ratio", "outer_max",
              "inner_formula_error", "inner_formula_sup", "theta_intercept", "jump_inner",
              "jump_outer"});
  t.add({std::to_string(n), std::to_string(g.sizes[0]), fmt(g.lengths[0]), fmt(prm.eps),
         fmt(prm.xi(n)), fmt(prm.eps0(n)), fmt(F), fmt(bound), fmt(F / bound), fmt(m.outer_max),
         fmt(m.inner_formula_error), fmt(m.inner_formula_sup), fmt(m.theta_intercept),
         fmt(m.jump_inner), fmt(m.jump_outer)});
  atomic_write(P.str("out"), t.str());
  art.push_back(P.str("out"));
  if (P.has("dump")) {
    write_spf1(P.str("dump"), m.field);
    art.push_back(P.str("dump"));
  }
  return 0;
}

int cmd_existence(const Params &P, json &art) {
  const int n = P.integer("n");
  check_n(n, 2, 3);
  const auto g = GridSpec::cube(n, P.integer("N"), P.num("L"));
  DiracOperator D(g, build_clifford(n));
  const auto ex = green_with_mass(D, P);
  const auto Hf = make_H(P, g, n);
  const ScalarField *H = P.str("H") == "const" ? nullptr : &Hf;
  const auto r = existence_criterion(D, H, ex, P.list("eps"));
  CsvTable t({"eps", "lambda_estimate", "ratio"});
  for (std::size_t i = 0; i < r.eps.size(); ++i)
    t.add({fmt(r.eps[i]), fmt(r.lambda_estimates[i]), fmt(r.ratios[i])});
  const fs::path out = P.str("out");
  atomic_write(out, t.str());
  json s;
  s["bound"] = r.bound;
  s["injected_mass"] = P.num("inject");
  s["alpha_max_eigenvalue"] = r.alpha_max_eigenvalue;
  s["fitted_mass_coeff"] = r.fitted_mass_coeff;
  s["predicted_coeff"] = r.predicted_coeff;
  s["quoted_coeff"] = r.quoted_coeff;
  s["criterion_met"] = r.criterion_met;
  s["explanation"] = r.explanation;
  write_json(sidecar(out, ".json"), s);
  art.push_back(out.string());
  art.push_back(sidecar(out, ".json").string());
  return 0;
}

// ---- report

struct Check {
  std::string name;
  double value;
  double tol;
  bool pass;
};

json check_json(const Check &c) {
  return {{"name", c.name}, {"value", c.value}, {"tolerance", c.tol}, {"pass", c.pass}};
}

double cell(const std::map<std::string, std::string> &row, const std::string &k) {
  const auto it = row.find(k);
  if (it == row.end() || it->second.empty())
    return NAN;
  return std::stod(it->second);
}

json read_json(const fs::path &p) {
  std::ifstream in(p);
  return json::parse(in);
}

int cmd_report(const Params &P, json &art) {
  const fs::path dir = P.str("dir");
  struct Crit {
    std::string id;
    std::vector<std::string> files;
    std::function<std::vector<Check>()> eval;
    std::string covers;
  };
  auto csv = [&](const std::string &f) { return read_csv(dir / f); };
  std::vector<Crit> crits = {
      {"A1", {"constants.csv"},
       [&] {
         double w = 0.0, k3 = NAN, l3 = NAN;
         for (const auto &r : csv("constants.csv")) {
           const double n = cell(r, "n");
           if (n <= 8)
             w = std::max(w, std::abs(cell(r, "Kn") - cell(r, "Kn_from_K2")) / cell(r, "Kn"));
           if (n == 3) {
             k3 = cell(r, "Kn");
             l3 = cell(r, "lam_sphere");
           }
         }
         const double dk = std::abs(k3 - 0.246744) / k3, dl = std::abs(l3 - 4.05397) / l3;
         return std::vector<Check>{{"Kn vs K2 form", w, 1e-13, w <= 1e-13},
                                   {"K(3) vs 0.246744", dk, 5e-4, dk <= 5e-4},
                                   {"lambda_min(S^3) vs 4.05397", dl, 5e-4, dl <= 5e-4}};
       },
       "closed forms"},
      {"A2", {"constants.csv"},
       [&] {
         double w = 0.0;
         for (const auto &r : csv("constants.csv"))
           w = std::max(w, std::abs(cell(r, "hijazi_gap")));
         return std::vector<Check>{{"hijazi_gap", w, 1e-12, w <= 1e-12}};
       },
       "rows present in constants.csv"},
      {"A3", {"constants.csv"},
       [&] {
         double w = 0.0;
         for (const auto &r : csv("constants.csv"))
           if (cell(r, "n") <= 6)
             w = std::max(w, cell(r, "clifford_defect"));
         return std::vector<Check>{{"clifford_defect", w, 1e-14, w <= 1e-14}};
       },
       "n from nmin to 6"},
      {"A4", {"sharp.csv"},
       [&] {
         double m = 0.0, k = 0.0;
         for (const auto &r : csv("sharp.csv")) {
           m = std::max(m, cell(r, "modulus_err"));
           k = std::max(k, cell(r, "killing_err"));
         }
         return std::vector<Check>{{"modulus_err", m, 1e-12, m <= 1e-12},
                                   {"killing_err", k, 1e-5, k <= 1e-5}};
       },
       "every sharp.csv row"},
      {"A5", {"sharp.csv"},
       [&] {
         auto rows = csv("sharp.csv");
         std::sort(rows.begin(), rows.end(),
                   [](auto &a, auto &b) { return cell(a, "radius") < cell(b, "radius"); });
         bool mono = rows.size() >= 3;
         for (std::size_t i = 1; i < rows.size(); ++i)
           mono = mono && cell(rows[i], "rel_err") < cell(rows[i - 1], "rel_err");
         const double last = rows.empty() ? NAN : cell(rows.back(), "rel_err");
         const double R = rows.empty() ? NAN : cell(rows.back(), "radius");
         return std::vector<Check>{{"monotone over radii", mono ? 1.0 : 0.0, 1.0, mono},
                                   {"largest radius", R, 16.0, R >= 16.0},
                                   {"rel_err at largest radius", last, 0.01, last <= 0.01}};
       },
       "three-radius study"},
      {"A6", {"sobolev.csv"},
       [&] {
         const auto rows = csv("sobolev.csv");
         int viol = 0;
         bool fin = true;
         for (const auto &r : rows) {
           viol += static_cast<int>(cell(r, "violations"));
           fin = fin && std::isfinite(cell(r, "B_fit"));
         }
         const double ch = rows.size() >= 2 ? std::abs(cell(rows[1], "B_fit") - cell(rows[0], "B_fit")) /
                                                  std::abs(cell(rows[0], "B_fit"))
                                            : NAN;
         return std::vector<Check>{{"B_fit finite", fin ? 1.0 : 0.0, 1.0, fin},
                                   {"violations", double(viol), 0.0, viol == 0},
                                   {"B_fit change first two N", ch, 0.2, ch <= 0.2}};
       },
       "fitted budget"},
      {"A7", {"sweep.csv"},
       [&] {
         double res = 0.0, cd = 0.0, lmin = INFINITY, conv = 1.0;
         for (const auto &r : csv("sweep.csv")) {
           res = std::max(res, cell(r, "el_residual"));
           cd = std::max(cd, cell(r, "constraint_defect"));
           lmin = std::min(lmin, cell(r, "lambda_q"));
           conv = std::min(conv, cell(r, "converged"));
         }
         return std::vector<Check>{{"all converged", conv, 1.0, conv == 1.0},
                                   {"el_residual", res, 1e-6, res <= 1e-6},
                                   {"constraint_defect", cd, 1e-8, cd <= 1e-8},
                                   {"min lambda_q", lmin, 0.0, lmin > 0.0}};
       },
       "sweep rows; the 1-D oracle and q-refinement continuity run in the acceptance binary"},
      {"A8", {"sweep.json", "upperbound.csv"},
       [&] {
         const auto s = read_json(dir / "sweep.json");
         const double ex = s.contains("extrapolated") ? s["extrapolated"].get<double>() : NAN;
         const double r1 = ex / s["bound"].get<double>();
         double r2 = 0.0;
         for (const auto &r : csv("upperbound.csv"))
           r2 = std::max(r2, cell(r, "ratio"));
         return std::vector<Check>{{"extrapolated / bound", r1, 1.05, r1 <= 1.05},
                                   {"competitor / bound", r2, 1.05, r2 <= 1.05}};
       },
       "one n per artifact set"},
      {"A9", {"green/green.json", "mass.csv", "existence.json"},
       [&] {
         const auto gj = read_json(dir / "green" / "green.json");
         const double sa = gj["alpha_self_adjoint_defect"].get<double>();
         std::vector<Check> c{{"alpha self-adjoint", sa, 1e-8, sa <= 1e-8}};
         if (gj.contains("alpha_refined_change")) {
           const double ch = gj["alpha_refined_change"].get<double>();
           const double tol = std::max(1e-3 * gj["alpha_refined_scale"].get<double>(), 1e-8);
           c.push_back({"alpha refinement change", ch, tol, ch <= tol});
         }
         for (const auto &r : csv("mass.csv")) {
           c.push_back({"outer max |D Phi|", cell(r, "outer_max"), 1e-8, cell(r, "outer_max") <= 1e-8});
           c.push_back({"inner formula", cell(r, "inner_formula_error"), 1e-5,
                        cell(r, "inner_formula_error") <= 1e-5});
         }
         const auto ej = read_json(dir / "existence.json");
         if (ej["alpha_max_eigenvalue"].get<double>() > 1e-8) {
           const double f = ej["fitted_mass_coeff"].get<double>(), p = ej["predicted_coeff"].get<double>();
           const double dev = std::abs(f - p) / std::abs(p);
           c.push_back({"eps^{n-1} coefficient vs predicted", dev, 0.2, f < 0.0 && dev <= 0.2});
         }
         return c;
       },
       "the dense-inverse oracle runs in the acceptance binary"},
  };

  json summary = json::object();
  std::vector<std::string> missing_all;
  std::set<std::string> expected;
  int present = 0;
  for (const auto &c : crits) {
    json e;
    std::vector<std::string> missing;
    for (const auto &f : c.files) {
      expected.insert(f);
      if (!fs::exists(dir / f))
        missing.push_back(f);
    }
    e["artifacts"] = c.files;
    e["covers"] = c.covers;
    if (!missing.empty()) {
      e["status"] = "missing";
      e["missing"] = missing;
    } else {
      ++present;
      json checks = json::array();
      bool ok = true;
      try {
        for (const auto &k : c.eval()) {
          checks.push_back(check_json(k));
          ok = ok && k.pass;
        }
      } catch (const std::exception &ex) {
        ok = false;
        e["error"] = ex.what();
      }
      e["checks"] = checks;
      e["status"] = ok ? "pass" : "fail";
    }
    summary[c.id] = e;
  }
  if (present == 0) {
    std::cerr << "report: no artifacts in " << dir << "; expected:";
    for (const auto &f : expected)
      std::cerr << " " << f;
    std::cerr << "\n";
    return exit_missing;
  }
  write_json(P.str("out"), summary);
  art.push_back(P.str("out"));
  return 0;
}

// ---- registry

std::vector<Command> commands() {
  const OptSpec H{"H", "const", "weight H: const or bump"};
  const OptSpec depth{"depth", "0.3", "bump depth, min H = 1 - depth"};
  auto grid_fields = [](const Params &P, int fields) {
    return footprint(P.integer("n"), P.integer("N"), fields);
  };
  return {
      {"constants", "sharp constants, Hijazi gap and Clifford defects per dimension",
       {{"nmin", "3", "first dimension"}, {"nmax", "8", "last dimension"}, {"out", "constants.csv", ""}},
       cmd_constants, [](const Params &) { return std::string("no grid"); }},
      {"sharp", "cut-off Killing spinor quotient at the critical exponent",
       {{"n", "3", ""}, {"radius", "16", "box radius list (eps = 1/radius)"},
        {"N", "192", "grid size, one or one per radius"}, {"L", "2", "box side"},
        {"delta", "0.45", "cutoff radius"}, {"out", "sharp.csv", ""}},
       cmd_sharp,
       [](const Params &P) {
         std::string s;
         for (int N : P.int_list("N"))
           s += footprint(P.integer("n"), N, 6) + "\n";
         return s;
       }},
      {"sobolev", "fitted B_eps of the Sobolev budget over seeded random spinors",
       {{"n", "3", ""}, {"N", "16,32", "grid sizes"}, {"L", "6.283185307179586", "torus side"},
        {"eps", "0.05", ""}, {"samples", "200", ""}, {"modes", "3", "mode radius of the family"},
        {"seed", "", "first seed (required)"}, {"halfnorm", "printed", "printed or squared"},
        {"out", "sobolev.csv", ""}},
       cmd_sobolev,
       [](const Params &P) {
         P.seed();
         std::string s;
         for (int N : P.int_list("N"))
           s += footprint(P.integer("n"), N, P.integer("samples") + 4) + "\n";
         return s;
       }},
      {"sweep", "subcritical minimizers over a q list, extrapolated to q_D",
       {{"n", "2", ""}, {"N", "32", ""}, {"L", "1", ""}, {"q", "", "list or start:stop:step, descending"},
        H, depth, {"tol", "1e-6", "EL residual tolerance"}, {"max_iter", "20000", ""},
        {"points", "2", "sweep points used by the extrapolation"},
        {"margin", "0", "non-triviality margin"}, {"out", "sweep.csv", ""}},
       cmd_sweep, [=](const Params &P) { P.list("q"); return grid_fields(P, 14); }},
      {"upperbound", "Killing-spinor competitor against K(n)^{-1} (max H)^{-2/p}",
       {{"n", "3", ""}, {"radius", "22", ""}, {"N", "192", ""}, {"L", "2", ""}, {"delta", "0.45", ""},
        H, depth, {"out", "upperbound.csv", ""}},
       cmd_upperbound, [=](const Params &P) { return grid_fields(P, 6); }},
      {"green", "Green function, regular part and mass endomorphism at the box middle",
       {{"n", "2", ""}, {"N", "64", ""}, {"L", "2", ""}, {"sing_radius", "0", "<= 0 selects L/4"},
        {"refine", "1", "also solve at 2N for the stability check"}, {"out", "green", "output directory"}},
       cmd_green,
       [=](const Params &P) {
         const int n = P.integer("n"), N = P.integer("N");
         std::string s = footprint(n, N, 4 * fiber_of(n) + 8);
         if (P.integer("refine"))
           s += "\n" + footprint(n, 2 * N, 4 * fiber_of(n) + 8);
         return s;
       }},
      {"mass", "three-zone test spinor built from the Green expansion",
       {{"n", "2", ""}, {"N", "512", ""}, {"L", "4", ""}, {"eps", "0.125", ""},
        {"component", "0", "fiber basis vector psi_p"},
        {"inject", "0", "synthetic constant mass added to alpha"},
        {"dump", "", "optional SPF1 path for Phi"}, {"out", "mass.csv", ""}},
       cmd_mass, [=](const Params &P) { return grid_fields(P, 4 * fiber_of(P.integer("n")) + 14); }},
      {"existence", "eps sweep of the mass test spinor and the eps^{n-1} fit",
       {{"n", "2", ""}, {"N", "512", ""}, {"L", "4", ""},
        {"eps", "0.125,0.1,0.08,0.0625,0.05", ""}, {"inject", "0", ""}, H, depth,
        {"out", "existence.csv", ""}},
       cmd_existence, [=](const Params &P) { return grid_fields(P, 4 * fiber_of(P.integer("n")) + 14); }},
      {"report", "consolidated pass/fail summary keyed by A1..A9",
       {{"dir", ".", "artifact directory"}, {"out", "summary.json", ""}},
       cmd_report, [](const Params &) { return std::string("no grid"); }},
  };
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"spinorlab: spectral Dirac-operator experiments on flat tori"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SPINORLAB_VERSION);
  auto cmds = commands();
  std::map<std::string, std::map<std::string, std::string>> given;
  std::map<std::string, std::string> config_path;
  std::map<std::string, bool> dry;
  for (auto &c : cmds) {
    auto *sub = app.add_subcommand(c.name, c.help);
    for (const auto &o : c.opts)
      sub->add_option("--" + o.name, given[c.name][o.name],
                      o.help + (o.def.empty() ? "" : " [" + o.def + "]"));
    sub->add_option("--config", config_path[c.name], "key=value config file with [section] headers");
    sub->add_flag("--dry-run", dry[c.name], "validate and print the planned memory footprint");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return exit_config;
  }

  const Command *cmd = nullptr;
  for (const auto &c : cmds)
    if (app.got_subcommand(c.name))
      cmd = &c;

  Params P;
  json manifest;
  try {
    std::set<std::string> known;
    for (const auto &o : cmd->opts) {
      known.insert(o.name);
      P.values[o.name] = o.def;
    }
    if (!config_path[cmd->name].empty()) {
      for (const auto &[key, val] : read_config(config_path[cmd->name])) {
        // sections only group keys; the bare key must be an option of this command
        const auto dot = key.rfind('.');
        const std::string bare = dot == std::string::npos ? key : key.substr(dot + 1);
        if (!known.count(bare))
          throw ConfigError("unknown config key " + key + " for " + cmd->name);
        P.values[bare] = val;
      }
    }
    auto *sub = app.get_subcommand(cmd->name);
    for (const auto &o : cmd->opts)
      if (sub->count("--" + o.name))
        P.values[o.name] = given[cmd->name][o.name];
    if (P.values.count("out") && P.values["out"].empty())
      throw ConfigError("out must not be empty");
    if (dry[cmd->name]) {
      std::cout << cmd->name << ": config ok\n" << cmd->plan(P) << "\n";
      return 0;
    }
  } catch (const std::exception &e) {
    std::cerr << "spinorlab " << cmd->name << ": " << e.what() << "\n";
    return exit_config;
  }

  init_fft_threads();
  const auto t0 = std::chrono::steady_clock::now();
  manifest["command"] = cmd->name;
  manifest["config"] = P.values;
  manifest["version"] = SPINORLAB_VERSION;
  manifest["started"] = now_iso();
  json artifacts = json::array();
  int status;
  try {
    status = cmd->run(P, artifacts);
  } catch (const ConfigError &e) {
    std::cerr << "spinorlab " << cmd->name << ": " << e.what() << "\n";
    return exit_config;
  } catch (const std::invalid_argument &e) {
    std::cerr << "spinorlab " << cmd->name << ": " << e.what() << "\n";
    return exit_config;
  } catch (const std::domain_error &e) {
    std::cerr << "spinorlab " << cmd->name << ": " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception &e) {
    std::cerr << "spinorlab " << cmd->name << ": " << e.what() << "\n";
    return 1;
  }
  if (status == exit_missing)
    return status;
  manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest["exit_status"] = status;
  manifest["artifacts"] = artifacts;
  fs::path mpath = P.str("out");
  mpath += ".manifest.json";
  write_json(mpath, manifest);
  if (status == exit_nonconv)
    std::cerr << "spinorlab " << cmd->name << ": some runs did not converge\n";
  return status;
}
