#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance run. Nothing here calls the library routine it checks.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "nafd/convex.hpp"
#include "nafd/sca.hpp"

namespace oracle {

using namespace nafd;

// Straight-line evaluator built from the raw channels and the analog/digital
// matrices, with explicit loops everywhere. Shares no code with the library.
struct Naive {
  const SystemConfig& cfg;
  const ChannelSet& ch;
  const BeamformerSet& bf;
  const OptVars& v;
  double rho;

  int nrf() const { return static_cast<int>(bf.w_analog[0].cols()); }
  int mant() const { return static_cast<int>(bf.w_analog[0].rows()); }

  double gram_diag(int m, int p) const {
    double s = 0.0;
    for (int k = 0; k < cfg.n_dl_users; ++k) s += v.eta[k] * std::norm(bf.f_digital[m](p, k));
    return s;
  }
  double cq(int m, int p) const {
    return rho * (1 - rho) * gram_diag(m, p) + (1 - rho) * v.sigma2_dl[m];
  }
  cd heff(int k, int m, int p) const {
    cd s = 0.0;
    for (int a = 0; a < mant(); ++a) s += std::conj(bf.w_analog[m](a, p)) * ch.h_dl[k][m][a];
    return s;
  }
  cd geff(int j, int z, int q) const {
    cd s = 0.0;
    for (int a = 0; a < mant(); ++a) s += std::conj(bf.u_analog[z](a, q)) * ch.g_ul[j][z][a];
    return s;
  }
  // (W_m^H Htilde_{m,z}^H U_z)(p, q)
  cd gres(int m, int z, int p, int q) const {
    cd s = 0.0;
    const CMat& h = ch.h_iri_resid[m][z];
    for (int a = 0; a < mant(); ++a)
      for (int b = 0; b < mant(); ++b)
        s += std::conj(bf.w_analog[m](a, p)) * std::conj(h(b, a)) * bf.u_analog[z](b, q);
    return s;
  }

  double r_dl(int k) const {
    double den = cfg.lin.noise;
    for (int m = 0; m < cfg.n_trau; ++m)
      for (int p = 0; p < nrf(); ++p) den += std::norm(heff(k, m, p)) * cq(m, p);
    for (int j = 0; j < cfg.n_ul_users; ++j) den += std::norm(ch.t_iui[k][j]) * v.p_ul[j];
    return std::log2(1 + (1 - rho) * (1 - rho) * v.eta[k] / den);
  }

  double r_ul(int j) const {
    const int z = bf.assoc[j];
    const CVec& w = bf.v_rx[j];
    double a = 0, b = 0, c = 0, d = 0;
    for (int m = 0; m < cfg.n_trau; ++m) {
      std::vector<cd> gv(nrf(), 0.0);
      for (int p = 0; p < nrf(); ++p)
        for (int q = 0; q < nrf(); ++q) gv[p] += gres(m, z, p, q) * w[q];
      for (int k = 0; k < cfg.n_dl_users; ++k) {
        cd s = 0.0;
        for (int p = 0; p < nrf(); ++p) s += std::conj(bf.f_digital[m](p, k)) * gv[p];
        a += v.eta[k] * std::norm(s);
      }
      for (int p = 0; p < nrf(); ++p) b += std::norm(gv[p]) * cq(m, p);
    }
    a *= (1 - rho) * (1 - rho);
    for (int i = 0; i < mant(); ++i) {
      cd s = 0.0;
      for (int q = 0; q < nrf(); ++q) s += bf.u_analog[z](i, q) * w[q];
      c += std::norm(s);
    }
    c *= cfg.lin.noise;
    for (int q = 0; q < nrf(); ++q) d += std::norm(w[q]);
    d *= v.sigma2_ul[z];
    cd sig = 0.0;
    for (int q = 0; q < nrf(); ++q) sig += std::conj(w[q]) * geff(j, z, q);
    return std::log2(1 + v.p_ul[j] * std::norm(sig) / (a + b + c + d));
  }

  double p_dl(int m) const {
    double t1 = 0, t2 = 0, t3 = 0;
    for (int a = 0; a < mant(); ++a) {
      for (int k = 0; k < cfg.n_dl_users; ++k) {
        cd s = 0.0;
        for (int p = 0; p < nrf(); ++p) s += bf.w_analog[m](a, p) * bf.f_digital[m](p, k);
        t1 += v.eta[k] * std::norm(s);
      }
      for (int p = 0; p < nrf(); ++p) {
        t2 += std::norm(bf.w_analog[m](a, p)) * gram_diag(m, p);
        t3 += std::norm(bf.w_analog[m](a, p));
      }
    }
    return (1 - rho) * (1 - rho) * t1 + rho * (1 - rho) * t2 + (1 - rho) * v.sigma2_dl[m] * t3;
  }
};

// Laplace expansion along the first row.
inline cd cofactor_det(const CMat& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 1) return a(0, 0);
  cd s = 0.0;
  for (int c = 0; c < n; ++c) {
    CMat minor(n - 1, n - 1);
    for (int i = 1; i < n; ++i)
      for (int j = 0, jj = 0; j < n; ++j)
        if (j != c) minor(i - 1, jj++) = a(i, j);
    s += (c % 2 ? -1.0 : 1.0) * a(0, c) * cofactor_det(minor);
  }
  return s;
}

inline double brute_c_dl(const Naive& nv, int m) {
  const int n = nv.nrf();
  CMat a = CMat::Zero(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      for (int k = 0; k < nv.cfg.n_dl_users; ++k)
        a(p, q) += nv.bf.f_digital[m](p, k) * std::conj(nv.bf.f_digital[m](q, k)) * nv.v.eta[k];
      if (p == q) a(p, q) += nv.v.sigma2_dl[m];
    }
  return std::log2(cofactor_det(a).real() / std::pow(nv.v.sigma2_dl[m], n));
}

inline double brute_c_ul(const Naive& nv, int z) {
  const int n = nv.nrf();
  double pd = 0.0;
  for (int m = 0; m < nv.cfg.n_trau; ++m) pd += nv.p_dl(m);
  const double s = nv.cfg.lin.residual_iri * pd + nv.cfg.lin.noise;
  CMat b = CMat::Zero(n, n);
  const CMat& u = nv.bf.u_analog[z];
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      for (int a = 0; a < nv.mant(); ++a) b(p, q) += s * std::conj(u(a, p)) * u(a, q);
      for (int j = 0; j < nv.cfg.n_ul_users; ++j)
        b(p, q) += nv.v.p_ul[j] * nv.geff(j, z, p) * std::conj(nv.geff(j, z, q));
      if (p == q) b(p, q) += nv.v.sigma2_ul[z];
    }
  return std::log2(cofactor_det(b).real() / std::pow(nv.v.sigma2_ul[z], n));
}

/// Relative disagreement between the library report and the naive evaluator
/// (max over rates, powers and capacities). `what` names the worst quantity.
inline double dual_evaluator_gap(const SystemConfig& cfg, const Realization& r,
                                 const OptVars& v, const QuantModel& q,
                                 std::string* what = nullptr) {
  const Naive nv{cfg, r.channels, r.beams, v, q.rho};
  const RateReport rep = evaluate_report(r.beams, r.channels, cfg, q, v);
  double worst = 0.0;
  auto track = [&](const char* name, double got, double want) {
    const double e = std::abs(got - want) / std::max(1.0, std::abs(want));
    if (e > worst) {
      worst = e;
      if (what) *what = name;
    }
  };
  for (int k = 0; k < cfg.n_dl_users; ++k) track("r_dl", rep.r_dl[k], nv.r_dl(k));
  for (int j = 0; j < cfg.n_ul_users; ++j) track("r_ul", rep.r_ul[j], nv.r_ul(j));
  for (int m = 0; m < cfg.n_trau; ++m) {
    track("p_dl", rep.p_dl[m], nv.p_dl(m));
    track("c_dl", rep.c_dl[m], brute_c_dl(nv, m));
  }
  for (int z = 0; z < cfg.n_rrau; ++z) track("c_ul", rep.c_ul[z], brute_c_ul(nv, z));
  return worst;
}

/// Sample mean of ||W_m((1-rho) F_m s + q)||^2 with s ~ CN(0, diag(eta)) and
/// q ~ CN(0, C_q block m).
inline double mc_transmit_power(const BeamformerSet& beams, const OptVars& v,
                                const QuantModel& q, int m, int draws, Rng& rng) {
  const CMat& w = beams.w_analog[m];
  const CMat& f = beams.f_digital[m];
  const int nrf = static_cast<int>(f.rows());
  const int K = static_cast<int>(f.cols());
  std::vector<double> qvar(nrf);
  for (int p = 0; p < nrf; ++p) {
    double g = 0.0;
    for (int k = 0; k < K; ++k) g += v.eta[k] * std::norm(f(p, k));
    qvar[p] = q.rho * (1 - q.rho) * g + (1 - q.rho) * v.sigma2_dl[m];
  }
  CVec s(K), qb(nrf);
  double acc = 0.0;
  for (int d = 0; d < draws; ++d) {
    for (int k = 0; k < K; ++k) s[k] = complex_gaussian(rng, v.eta[k]);
    for (int p = 0; p < nrf; ++p) qb[p] = complex_gaussian(rng, qvar[p]);
    acc += (w * ((1 - q.rho) * (f * s) + qb)).squaredNorm();
  }
  return acc / draws;
}

/// a^T x - w ln x_v - rhs
inline double aml_value(const AffineMinusLogConstraint& c, const RVec& x) {
  double s = -c.log_weight * std::log(x[c.log_var]) - c.rhs;
  for (int i = 0; i < x.size(); ++i) s += c.a[i] * x[i];
  return s;
}

struct GridOptimum {
  RVec x;
  double obj = -std::numeric_limits<double>::infinity();
};

// Exhaustive search on a log-spaced grid. The window follows the incumbent:
// it halves when the incumbent is interior and slides at the same spacing
// when the incumbent sits on its edge (ridges along active constraints).
inline GridOptimum grid_search(const ConvexProblem& p, const RVec& x0) {
  const int n = p.n_vars;
  constexpr int kPts = 17;
  RVec lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = std::log(std::max(x0[i] * 1e-9, p.lower_bounds[i] > 0 ? p.lower_bounds[i] : 0.0));
    double top = x0[i] * 1e6;
    if (std::isfinite(p.upper_bounds[i])) top = std::min(top, p.upper_bounds[i]);
    hi[i] = std::log(top);
  }
  GridOptimum best;
  RVec step = (hi - lo) / (kPts - 1);
  for (int level = 0; level < 200 && step.maxCoeff() > 1e-9; ++level) {
    std::vector<int> idx(n, 0), best_idx(n, -1);
    RVec x(n);
    while (true) {
      for (int i = 0; i < n; ++i) x[i] = std::exp(lo[i] + idx[i] * step[i]);
      if (p.min_slack(x) >= 0.0) {
        const double o = p.objective(x);
        if (o > best.obj) { best.obj = o; best.x = x; best_idx = idx; }
      }
      int d = 0;
      while (d < n && ++idx[d] == kPts) idx[d++] = 0;
      if (d == n) break;
    }
    if (best.x.size() == 0) break;
    for (int i = 0; i < n; ++i) {
      const double c = std::log(best.x[i]);
      const bool edge = best_idx[i] == 0 || best_idx[i] == kPts - 1;
      const double lb = p.lower_bounds[i] > 0 ? std::log(p.lower_bounds[i]) : -1e300;
      const double ub = std::isfinite(p.upper_bounds[i]) ? std::log(p.upper_bounds[i]) : 1e300;
      const bool pinned = (best_idx[i] == 0 && c <= lb + 1e-12) ||
                          (best_idx[i] == kPts - 1 && c >= ub - 1e-12);
      if (!edge || pinned) step[i] *= 0.5;
      lo[i] = std::max(c - 8 * step[i], lb);
      hi[i] = std::min(c + 8 * step[i], ub);
      step[i] = (hi[i] - lo[i]) / (kPts - 1);
    }
  }
  return best;
}

struct TinySub {
  SystemConfig cfg;
  Realization r;
  ConvexProblem p;
  RVec x0;
};

inline TinySub tiny_subproblem(int seed) {
  TinySub t;
  t.cfg = fx::tiny();
  t.cfg.c_dl_bpshz = t.cfg.c_ul_bpshz = 6.0;
  t.r = fx::realization(t.cfg, 4000 + seed);
  const ScaContext ctx(t.cfg, t.r.beams, t.r.channels, QuantModel::for_bits(1 + seed % 4));
  const ScaState st = make_state(ctx, init_vars(ctx));
  t.p = build_subproblem(ctx, st);
  t.x0 = st.x;
  return t;
}

/// Ridders' extrapolated central difference of f at x, starting from step h
/// and shrinking by 1.4. Returns the estimate; *err gets the tableau's error.
inline double ridders(const std::function<double(double)>& f, double x, double h,
                      double* err = nullptr) {
  constexpr int kN = 12;
  constexpr double kCon = 1.4, kCon2 = kCon * kCon;
  double a[kN][kN];
  double best = 0.0, e = std::numeric_limits<double>::infinity();
  a[0][0] = (f(x + h) - f(x - h)) / (2 * h);
  for (int i = 1; i < kN; ++i) {
    h /= kCon;
    a[0][i] = (f(x + h) - f(x - h)) / (2 * h);
    double fac = kCon2;
    for (int j = 1; j <= i; ++j) {
      a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1);
      fac *= kCon2;
      const double t = std::max(std::abs(a[j][i] - a[j - 1][i]), std::abs(a[j][i] - a[j - 1][i - 1]));
      if (t <= e) {
        e = t;
        best = a[j][i];
      }
    }
    if (std::abs(a[i][i] - a[i - 1][i - 1]) >= 2 * e) break;
  }
  if (err) *err = e;
  return best;
}

struct GradientCheck {
  double worst = 0.0;  // max relative error over resolvable coordinates
  int checked = 0;
  int unresolvable = 0;
};

/// Compares the linearized-h coefficients with derivatives of h itself.
/// Coordinates where a +-10% change moves h by less than 1e-9 |h| carry no
/// finite-difference information in double precision and are only counted.
inline GradientCheck h_gradient_check(const ScaContext& ctx, const ScaState& st) {
  const AffineFunctional lin = linearize_h(ctx, st);
  const double h0 = concave_part(ctx, st.x);
  GradientCheck out;
  for (int i = 0; i < st.x.size(); ++i) {
    auto along = [&](double xi) {
      RVec x = st.x;
      x[i] = xi;
      return concave_part(ctx, x);
    };
    const double xi = st.x[i];
    if (std::abs(along(1.1 * xi) - along(0.9 * xi)) < 1e-9 * std::max(1.0, std::abs(h0))) {
      ++out.unresolvable;
      continue;
    }
    const double d = ridders(along, xi, 0.1 * xi);
    out.worst = std::max(out.worst, std::abs(d - lin.coeff[i]) / std::abs(lin.coeff[i]));
    ++out.checked;
  }
  return out;
}

}  // namespace oracle
