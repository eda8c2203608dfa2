#include "nafd/convex.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <Eigen/Cholesky>

#include "nafd/kernels/kernels.hpp"

namespace nafd {

std::string_view status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

double ConvexProblem::objective(const RVec& x) const {
  double f = constant;
  for (const auto& lt : log_terms)
    f += lt.weight * std::log(kernels::dot(lt.a, {x.data(), static_cast<std::size_t>(n_vars)}) + lt.b);
  f += kernels::dot(linear_obj, {x.data(), static_cast<std::size_t>(n_vars)});
  return f;
}

int ConvexProblem::n_inequalities() const {
  int m = static_cast<int>(affine_cons.size() + affine_minus_log_cons.size());
  for (int i = 0; i < n_vars; ++i) {
    if (std::isfinite(lower_bounds[i])) ++m;
    if (std::isfinite(upper_bounds[i])) ++m;
  }
  return m;
}

double ConvexProblem::min_slack(const RVec& x) const {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(n_vars));
  double s = std::numeric_limits<double>::infinity();
  for (const auto& lt : log_terms) {
    const double u = kernels::dot(lt.a, xs) + lt.b;
    if (!(u > 0.0)) return kNegInf;
  }
  for (const auto& c : affine_cons) s = std::min(s, c.rhs - kernels::dot(c.a, xs));
  for (const auto& c : affine_minus_log_cons) {
    if (!(x[c.log_var] > 0.0)) return kNegInf;
    s = std::min(s, c.rhs - kernels::dot(c.a, xs) + c.log_weight * std::log(x[c.log_var]));
  }
  for (int i = 0; i < n_vars; ++i) {
    if (std::isfinite(lower_bounds[i])) s = std::min(s, x[i] - lower_bounds[i]);
    if (std::isfinite(upper_bounds[i])) s = std::min(s, upper_bounds[i] - x[i]);
  }
  return s;
}

void ConvexProblem::validate() const {
  auto bad = [](const std::string& m) { throw SolverError("malformed problem: " + m); };
  const auto n = static_cast<std::size_t>(n_vars);
  if (linear_obj.size() != n || lower_bounds.size() != n || upper_bounds.size() != n)
    bad("vector sizes do not match n_vars");
  for (const auto& lt : log_terms)
    if (lt.a.size() != n) bad("log term size");
  for (const auto& c : affine_cons)
    if (c.a.size() != n) bad("affine constraint size");
  for (const auto& c : affine_minus_log_cons) {
    if (c.a.size() != n || c.log_var < 0 || c.log_var >= n_vars) bad("affine-minus-log constraint");
    if (!(lower_bounds[c.log_var] > 0.0)) bad("log variable without a positive lower bound");
  }
}

namespace {

// The problem in scaled coordinates y = x / scale, flattened for the kernels.
struct Scaled {
  int n = 0;
  int n_log = 0;
  int n_con = 0;
  std::vector<double> scale;
  std::vector<double> log_a, log_b, log_w;  // n_log x n
  std::vector<double> lin;
  std::vector<double> con_a, con_r;         // n_con x n, rhs
  std::vector<int> con_logvar;              // -1 for purely affine
  std::vector<double> con_logw;
  std::vector<int> lb_idx, ub_idx;
  std::vector<double> lb_val, ub_val;
  int m() const { return n_con + static_cast<int>(lb_idx.size() + ub_idx.size()); }
};

Scaled make_scaled(const ConvexProblem& p, const RVec& x0) {
  Scaled s;
  s.n = p.n_vars;
  const int n = s.n;
  s.scale.resize(n);
  for (int i = 0; i < n; ++i) {
    const double a = std::abs(x0[i]);
    s.scale[i] = a > 0.0 ? a : 1.0;
  }
  s.n_log = static_cast<int>(p.log_terms.size());
  for (const auto& lt : p.log_terms) {
    for (int i = 0; i < n; ++i) s.log_a.push_back(lt.a[i] * s.scale[i]);
    s.log_b.push_back(lt.b);
    s.log_w.push_back(lt.weight);
  }
  s.lin.resize(n);
  for (int i = 0; i < n; ++i) s.lin[i] = p.linear_obj[i] * s.scale[i];

  // Rows are normalized; -ln(c * slack) differs from -ln(slack) by a constant.
  auto add_row = [&](const std::vector<double>& a, double rhs, int lv, double lw) {
    double nrm = std::abs(rhs);
    for (int i = 0; i < n; ++i) nrm = std::max(nrm, std::abs(a[i] * s.scale[i]));
    if (lv >= 0) nrm = std::max(nrm, std::abs(lw));
    if (!(nrm > 0.0)) nrm = 1.0;
    for (int i = 0; i < n; ++i) s.con_a.push_back(a[i] * s.scale[i] / nrm);
    double r = rhs;
    if (lv >= 0) r += lw * std::log(s.scale[lv]);
    s.con_r.push_back(r / nrm);
    s.con_logvar.push_back(lv);
    s.con_logw.push_back(lv >= 0 ? lw / nrm : 0.0);
  };
  for (const auto& c : p.affine_cons) add_row(c.a, c.rhs, -1, 0.0);
  for (const auto& c : p.affine_minus_log_cons) add_row(c.a, c.rhs, c.log_var, c.log_weight);
  s.n_con = static_cast<int>(s.con_r.size());
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(p.lower_bounds[i])) {
      s.lb_idx.push_back(i);
      s.lb_val.push_back(p.lower_bounds[i] / s.scale[i]);
    }
    if (std::isfinite(p.upper_bounds[i])) {
      s.ub_idx.push_back(i);
      s.ub_val.push_back(p.upper_bounds[i] / s.scale[i]);
    }
  }
  return s;
}

struct Workspace {
  std::vector<double> log_u, con_s, tmp, grad, hess, row;
  explicit Workspace(const Scaled& s)
      : log_u(s.n_log), con_s(s.n_con), tmp(std::max(s.n_log, s.n_con)),
        grad(s.n), hess(static_cast<std::size_t>(s.n) * s.n), row(s.n) {}
};

// Fills log arguments and constraint slacks; false if outside the domain.
bool slacks(const Scaled& s, const double* y, Workspace& w) {
  const auto& K = kernels::active();
  if (s.n_log > 0) {
    K.gemv_rows(s.log_a.data(), s.n_log, s.n, s.n, y, s.log_b.data(), w.log_u.data());
    for (int i = 0; i < s.n_log; ++i)
      if (!(w.log_u[i] > 0.0)) return false;
  }
  if (s.n_con > 0) {
    K.gemv_rows(s.con_a.data(), s.n_con, s.n, s.n, y, nullptr, w.tmp.data());
    for (int i = 0; i < s.n_con; ++i) {
      double v = s.con_r[i] - w.tmp[i];
      const int lv = s.con_logvar[i];
      if (lv >= 0) {
        if (!(y[lv] > 0.0)) return false;
        v += s.con_logw[i] * std::log(y[lv]);
      }
      if (!(v > 0.0)) return false;
      w.con_s[i] = v;
    }
  }
  for (std::size_t b = 0; b < s.lb_idx.size(); ++b)
    if (!(y[s.lb_idx[b]] - s.lb_val[b] > 0.0)) return false;
  for (std::size_t b = 0; b < s.ub_idx.size(); ++b)
    if (!(s.ub_val[b] - y[s.ub_idx[b]] > 0.0)) return false;
  return true;
}

// Scaled objective (without constant); requires slacks() to have succeeded.
double scaled_objective(const Scaled& s, const double* y, const Workspace& w) {
  double f = 0.0;
  for (int i = 0; i < s.n_log; ++i) f += s.log_w[i] * std::log(w.log_u[i]);
  return f + kernels::active().dot(s.lin.data(), y, s.n);
}

double barrier_value(const Scaled& s, const double* y, double t, const Workspace& w) {
  double phi = -t * scaled_objective(s, y, w);
  for (int i = 0; i < s.n_con; ++i) phi -= std::log(w.con_s[i]);
  for (std::size_t b = 0; b < s.lb_idx.size(); ++b) phi -= std::log(y[s.lb_idx[b]] - s.lb_val[b]);
  for (std::size_t b = 0; b < s.ub_idx.size(); ++b) phi -= std::log(s.ub_val[b] - y[s.ub_idx[b]]);
  return phi;
}

// Gradient and Hessian of the barrier function at y (slacks already filled).
void derivatives(const Scaled& s, const double* y, double t, Workspace& w) {
  const auto& K = kernels::active();
  const int n = s.n;
  std::fill(w.grad.begin(), w.grad.end(), 0.0);
  std::fill(w.hess.begin(), w.hess.end(), 0.0);
  K.axpy(w.grad.data(), s.lin.data(), -t, n);
  for (int i = 0; i < s.n_log; ++i) {
    const double u = w.log_u[i];
    const double* a = s.log_a.data() + static_cast<std::size_t>(i) * n;
    K.axpy(w.grad.data(), a, -t * s.log_w[i] / u, n);
    K.syr(w.hess.data(), n, a, t * s.log_w[i] / (u * u));
  }
  for (int i = 0; i < s.n_con; ++i) {
    const double sl = w.con_s[i];
    const double* a = s.con_a.data() + static_cast<std::size_t>(i) * n;
    std::copy(a, a + n, w.row.begin());  // -grad(slack)
    const int lv = s.con_logvar[i];
    if (lv >= 0) w.row[lv] -= s.con_logw[i] / y[lv];
    K.axpy(w.grad.data(), w.row.data(), 1.0 / sl, n);
    K.syr(w.hess.data(), n, w.row.data(), 1.0 / (sl * sl));
    if (lv >= 0) w.hess[static_cast<std::size_t>(lv) * n + lv] += s.con_logw[i] / (y[lv] * y[lv] * sl);
  }
  for (std::size_t b = 0; b < s.lb_idx.size(); ++b) {
    const int i = s.lb_idx[b];
    const double d = y[i] - s.lb_val[b];
    w.grad[i] -= 1.0 / d;
    w.hess[static_cast<std::size_t>(i) * n + i] += 1.0 / (d * d);
  }
  for (std::size_t b = 0; b < s.ub_idx.size(); ++b) {
    const int i = s.ub_idx[b];
    const double d = s.ub_val[b] - y[i];
    w.grad[i] += 1.0 / d;
    w.hess[static_cast<std::size_t>(i) * n + i] += 1.0 / (d * d);
  }
}

// Solves H dx = -g with escalating diagonal regularization.
bool newton_direction(const Workspace& w, int n, RVec& dx) {
  Eigen::Map<const RMat> h(w.hess.data(), n, n);
  Eigen::Map<const RVec> g(w.grad.data(), n);
  const double diag_scale = std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
  Eigen::LLT<RMat> llt(h);
  if (llt.info() == Eigen::Success) {
    dx = -llt.solve(g);
    if (dx.allFinite()) return true;
  }
  for (double reg = 1e-10; reg <= 1e-2; reg *= 10.0) {
    RMat hr = h;
    hr.diagonal().array() += reg * diag_scale;
    Eigen::LLT<RMat> l2(hr);
    if (l2.info() == Eigen::Success) {
      dx = -l2.solve(g);
      if (dx.allFinite()) return true;
    }
  }
  return false;
}

}  // namespace

SolveResult solve(const ConvexProblem& p, const RVec& x0, const BarrierOptions& opt) {
  p.validate();
  if (x0.size() != p.n_vars) throw SolverError("x0 has the wrong dimension");
  if (!(p.min_slack(x0) > 0.0)) throw SolverError("x0 is not strictly feasible");

  const Scaled s = make_scaled(p, x0);
  const int n = s.n;
  Workspace w(s);
  RVec y(n), y_try(n), dx(n);
  for (int i = 0; i < n; ++i) y[i] = x0[i] / s.scale[i];
  if (!slacks(s, y.data(), w)) throw SolverError("x0 is not strictly feasible after scaling");

  SolveResult res;
  const int m = std::max(1, s.m());
  double t = opt.t0;
  bool failed = false;
  int newton = 0;

  while (true) {
    // Centering.
    bool centered = false;
    int polish = 0;
    double last_lambda2 = std::numeric_limits<double>::infinity();
    while (newton < opt.max_newton) {
      slacks(s, y.data(), w);
      derivatives(s, y.data(), t, w);
      if (!newton_direction(w, n, dx)) {
        failed = true;
        break;
      }
      const double slope = kernels::active().dot(w.grad.data(), dx.data(), n);
      const double lambda2 = -slope;
      const double phi0 = barrier_value(s, y.data(), t, w);
      // Past this point the predicted decrease is below the resolution of phi.
      const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(phi0);
      if (lambda2 / 2.0 <= opt.newton_tol) {
        centered = true;
        break;
      }
      if (lambda2 / 2.0 <= floor) {
        // The line search cannot see progress any more; the decrement (from
        // gradients) still can. Undamped steps while it keeps falling.
        if (polish >= 8 || lambda2 >= last_lambda2) {
          centered = true;
          break;
        }
        y_try = y + dx;
        if (!slacks(s, y_try.data(), w)) {
          centered = true;
          break;
        }
        ++polish;
        ++newton;
        last_lambda2 = lambda2;
        y = y_try;
        continue;
      }
      ++newton;
      double step = 1.0;
      bool accepted = false;
      while (step > 1e-20) {
        y_try = y + step * dx;
        if (slacks(s, y_try.data(), w) &&
            barrier_value(s, y_try.data(), t, w) <= phi0 + opt.alpha * step * slope) {
          accepted = true;
          break;
        }
        step *= opt.beta;
      }
      if (!accepted) {
        // No further decrease representable at this t; treat as centered.
        centered = true;
        break;
      }
      y = y_try;
    }
    slacks(s, y.data(), w);
    if (failed) break;
    ++res.barrier_outer_iters;
    res.outer_objectives.push_back(scaled_objective(s, y.data(), w) + p.constant);
    if (!centered) break;  // Newton budget exhausted
    if (static_cast<double>(m) / t <= opt.gap_tol) break;
    t *= opt.mu;
  }

  res.newton_iters = newton;
  res.barrier_t = t;
  res.x_opt.resize(n);
  for (int i = 0; i < n; ++i) res.x_opt[i] = y[i] * s.scale[i];
  res.obj = p.objective(res.x_opt);
  res.kkt_residual = check_kkt(p, res.x_opt, t);
  const bool converged = !failed && static_cast<double>(m) / t <= opt.gap_tol &&
                         newton < opt.max_newton;
  if (failed)
    res.status = SolveStatus::NumericalFailure;
  else if (!converged)
    res.status = SolveStatus::MaxIter;
  else if (res.kkt_residual <= 1e-6 && p.min_slack(res.x_opt) >= -1e-8)
    res.status = SolveStatus::Optimal;
  else
    res.status = SolveStatus::NumericalFailure;
  return res;
}

namespace {

struct ConstraintView {
  std::vector<double> grad;  // gradient of the constraint function c(x) (c <= 0 form)
  double slack = 0.0;
  double rel_slack = 0.0;
};

std::vector<ConstraintView> constraint_views(const ConvexProblem& p, const RVec& x) {
  const int n = p.n_vars;
  std::vector<ConstraintView> out;
  for (const auto& c : p.affine_cons) {
    ConstraintView v;
    v.grad = c.a;
    double mag = std::abs(c.rhs), ax = 0.0;
    for (int i = 0; i < n; ++i) {
      ax += c.a[i] * x[i];
      mag += std::abs(c.a[i] * x[i]);
    }
    v.slack = c.rhs - ax;
    v.rel_slack = v.slack / std::max(mag, 1e-300);
    out.push_back(std::move(v));
  }
  for (const auto& c : p.affine_minus_log_cons) {
    ConstraintView v;
    v.grad = c.a;
    v.grad[c.log_var] -= c.log_weight / x[c.log_var];
    const double lg = c.log_weight * std::log(x[c.log_var]);
    double mag = std::abs(c.rhs) + std::abs(lg), ax = 0.0;
    for (int i = 0; i < n; ++i) {
      ax += c.a[i] * x[i];
      mag += std::abs(c.a[i] * x[i]);
    }
    v.slack = c.rhs - ax + lg;
    v.rel_slack = v.slack / std::max(mag, 1e-300);
    out.push_back(std::move(v));
  }
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(p.lower_bounds[i])) {
      ConstraintView v;
      v.grad.assign(n, 0.0);
      v.grad[i] = -1.0;
      v.slack = x[i] - p.lower_bounds[i];
      // A bound at zero is handled by the |x_i| weighting of the residual.
      v.rel_slack = p.lower_bounds[i] == 0.0 ? 1.0
                                             : v.slack / std::abs(p.lower_bounds[i]);
      out.push_back(std::move(v));
    }
    if (std::isfinite(p.upper_bounds[i])) {
      ConstraintView v;
      v.grad.assign(n, 0.0);
      v.grad[i] = 1.0;
      v.slack = p.upper_bounds[i] - x[i];
      v.rel_slack = v.slack / std::max(std::abs(p.upper_bounds[i]), 1e-300);
      out.push_back(std::move(v));
    }
  }
  return out;
}

RVec objective_gradient(const ConvexProblem& p, const RVec& x) {
  const int n = p.n_vars;
  RVec g = Eigen::Map<const RVec>(p.linear_obj.data(), n);
  for (const auto& lt : p.log_terms) {
    double u = lt.b;
    for (int i = 0; i < n; ++i) u += lt.a[i] * x[i];
    for (int i = 0; i < n; ++i) g[i] += lt.weight * lt.a[i] / u;
  }
  return g;
}

// Lawson-Hanson non-negative least squares: min ||A l - b||, l >= 0.
RVec nnls(const RMat& A, const RVec& b) {
  const Eigen::Index k = A.cols();
  RVec l = RVec::Zero(k);
  std::vector<bool> passive(k, false);
  for (int outer = 0; outer < 3 * k + 10; ++outer) {
    const RVec w = A.transpose() * (b - A * l);
    Eigen::Index best = -1;
    double wmax = 1e-14;
    for (Eigen::Index i = 0; i < k; ++i)
      if (!passive[i] && w[i] > wmax) {
        wmax = w[i];
        best = i;
      }
    if (best < 0) break;
    passive[best] = true;
    for (int inner = 0; inner < 3 * k + 10; ++inner) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index i = 0; i < k; ++i)
        if (passive[i]) idx.push_back(i);
      RMat Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t c = 0; c < idx.size(); ++c) Ap.col(c) = A.col(idx[c]);
      const RVec zp = Ap.colPivHouseholderQr().solve(b);
      RVec z = RVec::Zero(k);
      for (std::size_t c = 0; c < idx.size(); ++c) z[idx[c]] = zp[c];
      bool all_pos = true;
      for (auto i : idx)
        if (z[i] <= 0.0) all_pos = false;
      if (all_pos) {
        l = z;
        break;
      }
      double alpha = 1.0;
      for (auto i : idx)
        if (z[i] <= 0.0) alpha = std::min(alpha, l[i] / (l[i] - z[i]));
      l += alpha * (z - l);
      for (auto i : idx)
        if (l[i] <= 1e-15) {
          passive[i] = false;
          l[i] = 0.0;
        }
    }
  }
  return l;
}

}  // namespace

double check_kkt(const ConvexProblem& p, const RVec& x, double barrier_t) {
  const int n = p.n_vars;
  const RVec g = objective_gradient(p, x);
  const auto cons = constraint_views(p, x);
  RVec d(n);
  for (int i = 0; i < n; ++i) d[i] = std::abs(x[i]) > 0.0 ? std::abs(x[i]) : 1.0;

  RVec resid = g;
  double complementarity = 0.0;
  if (barrier_t > 0.0) {
    for (const auto& c : cons) {
      const double lam = 1.0 / (barrier_t * c.slack);
      for (int i = 0; i < n; ++i) resid[i] -= lam * c.grad[i];
      complementarity = std::max(complementarity, 1.0 / barrier_t);
    }
  } else {
    std::vector<const ConstraintView*> active;
    for (const auto& c : cons)
      if (c.rel_slack <= 1e-6) active.push_back(&c);
    if (!active.empty()) {
      RMat A(n, static_cast<Eigen::Index>(active.size()));
      for (std::size_t c = 0; c < active.size(); ++c)
        for (int i = 0; i < n; ++i) A(i, c) = d[i] * active[c]->grad[i];
      const RVec lam = nnls(A, d.cwiseProduct(g));
      for (std::size_t c = 0; c < active.size(); ++c) {
        for (int i = 0; i < n; ++i) resid[i] -= lam[c] * active[c]->grad[i];
        complementarity = std::max(complementarity, lam[c] * std::abs(active[c]->rel_slack));
      }
    }
  }
  return d.cwiseProduct(resid).cwiseAbs().maxCoeff() + complementarity;
}

void write_problem(std::ostream& os, const ConvexProblem& p) {
  auto vec = [&](const std::vector<double>& v) {
    for (double a : v) os << ' ' << std::setprecision(17) << a;
  };
  os << "n_vars " << p.n_vars << '\n';
  os << "constant " << std::setprecision(17) << p.constant << '\n';
  os << "linear";
  vec(p.linear_obj);
  os << '\n';
  for (const auto& lt : p.log_terms) {
    os << "log " << std::setprecision(17) << lt.weight << ' ' << lt.b;
    vec(lt.a);
    os << '\n';
  }
  for (const auto& c : p.affine_cons) {
    os << "affine " << std::setprecision(17) << c.rhs;
    vec(c.a);
    os << '\n';
  }
  for (const auto& c : p.affine_minus_log_cons) {
    os << "affine_minus_log " << std::setprecision(17) << c.rhs << ' ' << c.log_var << ' '
       << c.log_weight;
    vec(c.a);
    os << '\n';
  }
  os << "lower";
  vec(p.lower_bounds);
  os << "\nupper";
  vec(p.upper_bounds);
  os << '\n';
}

}  // namespace nafd
