#include "nafd/sca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nafd/csv.hpp"
#include "nafd/kernels/kernels.hpp"

namespace nafd {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

CMat dl_fronthaul_cov(const BeamformerSet& beams, const OptVars& v, int m) {
  const CMat& f = beams.f_digital[m];
  CVec e(static_cast<Eigen::Index>(v.eta.size()));
  for (std::size_t k = 0; k < v.eta.size(); ++k) e[k] = v.eta[k];
  CMat a = f * e.asDiagonal() * f.adjoint();
  a.diagonal().array() += v.sigma2_dl[m];
  return a;
}

std::vector<double> eval_rows(const AffineRows& r, const RVec& x) {
  std::vector<double> out(r.rows);
  if (r.rows > 0) r.eval(x.data(), out.data());
  return out;
}

CMat ul_fronthaul_cov(const ScaContext& ctx, const OptVars& v, double pd_sum, int z) {
  const CMat& u = ctx.beams.u_analog[z];
  CMat b = (ctx.cfg.lin.residual_iri * pd_sum + ctx.cfg.lin.noise) * (u.adjoint() * u);
  for (std::size_t j = 0; j < v.p_ul.size(); ++j) {
    const CVec& g = ctx.beams.g_eff[j][z];
    b += v.p_ul[j] * g * g.adjoint();
  }
  b.diagonal().array() += v.sigma2_ul[z];
  return b;
}

double sum_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

ScaState make_state(const ScaContext& ctx, const OptVars& vars, int n) {
  ScaState s;
  s.iterate = vars;
  s.x = ctx.model.layout.pack(vars);
  s.n = n;
  const int NT = ctx.cfg.n_trau, NR = ctx.cfg.n_rrau;
  for (int m = 0; m < NT; ++m) s.a_t.push_back(dl_fronthaul_cov(ctx.beams, vars, m));
  const double pd_sum = sum_of(eval_rows(ctx.model.p_dl, s.x));
  for (int z = 0; z < NR; ++z) s.b_t.push_back(ul_fronthaul_cov(ctx, vars, pd_sum, z));
  for (double i : eval_rows(ctx.model.dl_interf, s.x)) s.phi_dl.push_back(1.0 / i);
  for (double i : eval_rows(ctx.model.ul_interf, s.x)) s.phi_ul.push_back(1.0 / i);
  s.cq_n = quant_covariance(ctx.beams.f_digital, vars, ctx.q);
  return s;
}

ConstraintReport check_constraints(const ScaContext& ctx, const OptVars& vars) {
  ConstraintReport r;
  const SystemConfig& cfg = ctx.cfg;
  const RVec x = ctx.model.layout.pack(vars);
  r.p_dl = eval_rows(ctx.model.p_dl, x);
  const double pd_sum = sum_of(r.p_dl);
  bool ok = true;
  for (int m = 0; m < cfg.n_trau; ++m) {
    const double s2 = vars.sigma2_dl[m];
    const double c = s2 > 0.0 ? fronthaul_dl(m, ctx.beams, vars)
                               : std::numeric_limits<double>::infinity();
    r.c_dl.push_back(c);
    r.max_cdl_violation = std::max(r.max_cdl_violation, c - cfg.c_dl_bpshz);
    r.max_pd_violation = std::max(r.max_pd_violation, r.p_dl[m] - cfg.lin.p_dl_max);
    ok = ok && c < cfg.c_dl_bpshz && r.p_dl[m] < cfg.lin.p_dl_max && s2 > kSigmaFloor;
  }
  for (int z = 0; z < cfg.n_rrau; ++z) {
    const double s2 = vars.sigma2_ul[z];
    double c = std::numeric_limits<double>::infinity();
    if (s2 > 0.0) {
      const CMat b = ul_fronthaul_cov(ctx, vars, pd_sum, z);
      c = (logdet_hermitian(b) - b.rows() * std::log(s2)) / kLn2;
    }
    r.c_ul.push_back(c);
    r.max_cul_violation = std::max(r.max_cul_violation, c - cfg.c_ul_bpshz);
    ok = ok && c < cfg.c_ul_bpshz && s2 > kSigmaFloor;
  }
  for (double p : vars.p_ul) {
    r.max_pu_violation = std::max(r.max_pu_violation, p - cfg.lin.p_ul_max);
    ok = ok && p >= 0.0 && p <= cfg.lin.p_ul_max;
  }
  for (double e : vars.eta) ok = ok && e >= 0.0;
  r.strictly_feasible = ok;
  return r;
}

// ---------------------------------------------------------------- init

namespace {

// Smallest log-spaced sigma2 in [lo, hi] with capacity(sigma2) <= goal.
// capacity is decreasing in sigma2.
template <class F>
double bisect_variance(F&& capacity, double lo, double hi, double goal) {
  double a = std::log(lo), b = std::log(hi);
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    const double mid = 0.5 * (a + b);
    if (capacity(std::exp(mid)) > goal) a = mid; else b = mid;
  }
  return std::exp(b);
}

}  // namespace

OptVars init_vars(const ScaContext& ctx, int* shrink_steps) {
  const SystemConfig& cfg = ctx.cfg;
  const VarLayout& L = ctx.model.layout;
  const double noise = cfg.lin.noise;
  const double pd_max = cfg.lin.p_dl_max;

  OptVars v;
  v.p_ul.assign(cfg.n_ul_users, 0.5 * cfg.lin.p_ul_max);
  v.sigma2_dl.assign(cfg.n_trau, noise);
  v.sigma2_ul.assign(cfg.n_rrau, noise);
  v.eta.assign(cfg.n_dl_users, 0.0);

  // Equal eta, busiest T-RAU at 80% of budget. P_D,m is affine in the common
  // eta so this is exact.
  if (cfg.n_dl_users > 0) {
    double c = std::numeric_limits<double>::infinity();
    for (int m = 0; m < cfg.n_trau; ++m) {
      const double* row = ctx.model.p_dl.row(m);
      double a = 0.0;
      for (int k = 0; k < cfg.n_dl_users; ++k) a += row[L.eta(k)];
      const double b = row[L.sigma2_dl(m)] * v.sigma2_dl[m];
      if (a > 0.0) c = std::min(c, (0.8 * pd_max - b) / a);
    }
    if (!std::isfinite(c) || c <= 0.0)
      throw ScaError("init: no downlink power headroom at the noise-level compression variance");
    v.eta.assign(cfg.n_dl_users, c);
  }

  std::string binding;
  for (int step = 0; step <= 60; ++step) {
    binding.clear();
    RVec x = L.pack(v);

    for (int m = 0; m < cfg.n_trau; ++m) {
      if (fronthaul_dl(m, ctx.beams, v) < cfg.c_dl_bpshz) continue;
      const double* row = ctx.model.p_dl.row(m);
      double used = 0.0;
      for (int k = 0; k < cfg.n_dl_users; ++k) used += row[L.eta(k)] * v.eta[k];
      const double per_var = row[L.sigma2_dl(m)];
      const double hi = per_var > 0.0 ? (pd_max * (1.0 - 1e-6) - used) / per_var
                                      : std::numeric_limits<double>::infinity();
      if (!(hi > v.sigma2_dl[m])) {
        binding = "downlink fronthaul at T-RAU " + std::to_string(m);
        continue;
      }
      OptVars trial = v;
      auto cap_at = [&](double s2) {
        trial.sigma2_dl[m] = s2;
        return fronthaul_dl(m, ctx.beams, trial);
      };
      double hi_eff = std::isfinite(hi) ? hi : v.sigma2_dl[m] * 1e30;
      const double c_hi = cap_at(hi_eff);
      if (c_hi >= cfg.c_dl_bpshz) {
        binding = "downlink fronthaul at T-RAU " + std::to_string(m);
        continue;
      }
      const double goal = std::max(0.9 * cfg.c_dl_bpshz, c_hi);
      v.sigma2_dl[m] = goal == c_hi ? hi_eff
                                    : bisect_variance(cap_at, v.sigma2_dl[m], hi_eff, goal);
    }

    x = L.pack(v);
    const double pd_sum = sum_of(eval_rows(ctx.model.p_dl, x));
    for (int z = 0; z < cfg.n_rrau; ++z) {
      auto cap_at = [&](double s2) {
        OptVars t = v;
        t.sigma2_ul[z] = s2;
        const CMat b = ul_fronthaul_cov(ctx, t, pd_sum, z);
        return (logdet_hermitian(b) - b.rows() * std::log(s2)) / kLn2;
      };
      if (cap_at(v.sigma2_ul[z]) < cfg.c_ul_bpshz) continue;
      double hi = v.sigma2_ul[z];
      for (int d = 0; d < 200 && cap_at(hi) > 0.9 * cfg.c_ul_bpshz; ++d) hi *= 4.0;
      v.sigma2_ul[z] = bisect_variance(cap_at, v.sigma2_ul[z], hi, 0.9 * cfg.c_ul_bpshz);
    }

    const ConstraintReport rep = check_constraints(ctx, v);
    if (rep.strictly_feasible) {
      if (shrink_steps) *shrink_steps = step;
      return v;
    }
    if (binding.empty()) {
      if (rep.max_pd_violation > 0.0) binding = "downlink transmit power";
      else if (rep.max_cul_violation >= 0.0) binding = "uplink fronthaul";
      else binding = "downlink fronthaul";
    }
    for (double& e : v.eta) e *= 0.5;
    for (double& p : v.p_ul) p *= 0.5;
  }
  throw ScaError("init: no strictly feasible point after 60 halvings; binding constraint: " +
                 binding);
}

// ---------------------------------------------------------------- linearizations

std::vector<AffineMinusLogConstraint> linearize_dl_fronthaul(const ScaContext& ctx,
                                                             const ScaState& state) {
  const VarLayout& L = ctx.model.layout;
  const int n = L.size();
  const int n_rf = ctx.beams.n_rf();
  std::vector<AffineMinusLogConstraint> out;
  for (int m = 0; m < ctx.cfg.n_trau; ++m) {
    const CMat ainv = state.a_t[m].inverse();
    const CMat& f = ctx.beams.f_digital[m];
    AffineMinusLogConstraint c;
    c.a.assign(n, 0.0);
    for (int k = 0; k < L.n_dl; ++k)
      c.a[L.eta(k)] = (f.col(k).adjoint() * ainv * f.col(k))(0, 0).real();
    c.a[L.sigma2_dl(m)] = ainv.trace().real();
    c.log_var = L.sigma2_dl(m);
    c.log_weight = n_rf;
    c.rhs = n_rf + ctx.cfg.c_dl_bpshz * kLn2 - logdet_hermitian(state.a_t[m]);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<AffineMinusLogConstraint> linearize_ul_fronthaul(const ScaContext& ctx,
                                                             const ScaState& state) {
  const VarLayout& L = ctx.model.layout;
  const int n = L.size();
  const int n_rf = ctx.beams.n_rf();
  const double s_iri = ctx.cfg.lin.residual_iri;

  // sum_m P_D,m(x) as one affine row
  std::vector<double> pd_sum(n, 0.0);
  for (int m = 0; m < ctx.cfg.n_trau; ++m)
    kernels::axpy({pd_sum.data(), pd_sum.size()},
                  {ctx.model.p_dl.row(m), static_cast<std::size_t>(n)}, 1.0);

  std::vector<AffineMinusLogConstraint> out;
  for (int z = 0; z < ctx.cfg.n_rrau; ++z) {
    const CMat binv = state.b_t[z].inverse();
    const CMat& u = ctx.beams.u_analog[z];
    const double tr_uub = (u.adjoint() * u * binv).trace().real();
    AffineMinusLogConstraint c;
    c.a.assign(n, 0.0);
    kernels::axpy({c.a.data(), c.a.size()}, {pd_sum.data(), pd_sum.size()}, s_iri * tr_uub);
    for (int j = 0; j < L.n_ul; ++j) {
      const CVec& g = ctx.beams.g_eff[j][z];
      c.a[L.p_ul(j)] += (g.adjoint() * binv * g)(0, 0).real();
    }
    c.a[L.sigma2_ul(z)] += binv.trace().real();
    c.log_var = L.sigma2_ul(z);
    c.log_weight = n_rf;
    c.rhs = ctx.cfg.c_ul_bpshz * kLn2 + n_rf - logdet_hermitian(state.b_t[z]) -
            ctx.cfg.lin.noise * tr_uub;
    out.push_back(std::move(c));
  }
  return out;
}

double AffineFunctional::operator()(const RVec& x) const {
  return constant + kernels::dot({coeff.data(), coeff.size()},
                                 {x.data(), static_cast<std::size_t>(x.size())});
}

double concave_part(const ScaContext& ctx, const RVec& x) {
  double h = 0.0;
  for (double i : eval_rows(ctx.model.dl_interf, x)) h += ctx.cfg.weight_dl * std::log2(i);
  for (double i : eval_rows(ctx.model.ul_interf, x)) h += ctx.cfg.weight_ul * std::log2(i);
  return h;
}

double convex_part_f(const ScaContext& ctx, const RVec& x) {
  const auto sd = eval_rows(ctx.model.dl_signal, x), id = eval_rows(ctx.model.dl_interf, x);
  const auto su = eval_rows(ctx.model.ul_signal, x), iu = eval_rows(ctx.model.ul_interf, x);
  double f = 0.0;
  for (std::size_t k = 0; k < sd.size(); ++k) f += ctx.cfg.weight_dl * std::log2(sd[k] + id[k]);
  for (std::size_t j = 0; j < su.size(); ++j) f += ctx.cfg.weight_ul * std::log2(su[j] + iu[j]);
  return f;
}

AffineFunctional linearize_h(const ScaContext& ctx, const ScaState& state) {
  const int n = ctx.model.layout.size();
  AffineFunctional h;
  h.coeff.assign(n, 0.0);
  std::span<double> acc{h.coeff.data(), h.coeff.size()};
  for (int k = 0; k < ctx.model.dl_interf.rows; ++k)
    kernels::axpy(acc, {ctx.model.dl_interf.row(k), static_cast<std::size_t>(n)},
                  ctx.cfg.weight_dl * state.phi_dl[k] / kLn2);
  for (int j = 0; j < ctx.model.ul_interf.rows; ++j)
    kernels::axpy(acc, {ctx.model.ul_interf.row(j), static_cast<std::size_t>(n)},
                  ctx.cfg.weight_ul * state.phi_ul[j] / kLn2);
  h.constant = concave_part(ctx, state.x) -
               kernels::dot({h.coeff.data(), h.coeff.size()},
                            {state.x.data(), static_cast<std::size_t>(n)});
  return h;
}

ConvexProblem build_subproblem(const ScaContext& ctx, const ScaState& state) {
  const VarLayout& L = ctx.model.layout;
  const int n = L.size();
  const SystemConfig& cfg = ctx.cfg;
  ConvexProblem p(n);

  auto add_logs = [&](const AffineRows& sig, const AffineRows& itf, double w) {
    for (int r = 0; r < sig.rows; ++r) {
      LogTerm t;
      t.a.resize(n);
      for (int i = 0; i < n; ++i) t.a[i] = sig.row(r)[i] + itf.row(r)[i];
      t.b = sig.constant[r] + itf.constant[r];
      t.weight = w / kLn2;
      p.log_terms.push_back(std::move(t));
    }
  };
  add_logs(ctx.model.dl_signal, ctx.model.dl_interf, cfg.weight_dl);
  add_logs(ctx.model.ul_signal, ctx.model.ul_interf, cfg.weight_ul);

  const AffineFunctional h = linearize_h(ctx, state);
  for (int i = 0; i < n; ++i) p.linear_obj[i] = -h.coeff[i];
  p.constant = -h.constant;

  for (int m = 0; m < cfg.n_trau; ++m) {
    AffineConstraint c;
    c.a.assign(ctx.model.p_dl.row(m), ctx.model.p_dl.row(m) + n);
    c.rhs = cfg.lin.p_dl_max - ctx.model.p_dl.constant[m];
    p.affine_cons.push_back(std::move(c));
  }
  for (auto& c : linearize_dl_fronthaul(ctx, state)) p.affine_minus_log_cons.push_back(std::move(c));
  for (auto& c : linearize_ul_fronthaul(ctx, state)) p.affine_minus_log_cons.push_back(std::move(c));

  for (int k = 0; k < L.n_dl; ++k) p.lower_bounds[L.eta(k)] = 0.0;
  for (int m = 0; m < L.n_trau; ++m) p.lower_bounds[L.sigma2_dl(m)] = kSigmaFloor;
  for (int z = 0; z < L.n_rrau; ++z) p.lower_bounds[L.sigma2_ul(z)] = kSigmaFloor;
  for (int j = 0; j < L.n_ul; ++j) {
    p.lower_bounds[L.p_ul(j)] = 0.0;
    p.upper_bounds[L.p_ul(j)] = cfg.lin.p_ul_max;
  }
  return p;
}

// ---------------------------------------------------------------- outer loop

namespace {

IterationRecord make_record(const ScaContext& ctx, int iter, double surrogate, const OptVars& v) {
  IterationRecord r;
  r.iter = iter;
  r.surrogate_obj = surrogate;
  r.true_obj = ctx.model.objective(ctx.model.layout.pack(v));
  const ConstraintReport c = check_constraints(ctx, v);
  r.max_cdl_violation = std::max(0.0, c.max_cdl_violation);
  r.max_cul_violation = std::max(0.0, c.max_cul_violation);
  r.max_pd_violation = std::max(0.0, c.max_pd_violation);
  r.max_pu_violation = std::max(0.0, c.max_pu_violation);
  return r;
}

}  // namespace

ScaResult run_sca(const SystemConfig& cfg, const BeamformerSet& beams,
                  const ChannelSet& channels, const QuantModel& q, const ScaOptions& opt,
                  const IterateObserver& observer) {
  ScaContext ctx(cfg, beams, channels, q);
  const VarLayout& L = ctx.model.layout;
  ScaResult res;

  OptVars v = init_vars(ctx, &res.init_shrink_steps);
  ScaState state = make_state(ctx, v, 0);
  double surrogate_prev = ctx.model.objective(state.x);
  {
    IterationRecord r = make_record(ctx, 0, surrogate_prev, v);
    state.objective_trace.push_back(r.true_obj);
    res.trace.push_back(r);
    if (observer) observer(state, r);
  }

  for (int it = 1; it <= opt.max_iter; ++it) {
    const ConvexProblem sub = build_subproblem(ctx, state);
    const double at_current = sub.objective(state.x);
    SolveResult sr;
    try {
      sr = solve(sub, state.x, opt.barrier);
    } catch (const SolverError&) {
      break;
    }

    // The barrier iterate is strictly feasible for the subproblem and hence
    // for the original constraints; rounding can still eat a ~1e-10 slack, so
    // verify against the next linearization and pull back toward the current
    // point if needed.
    RVec x_new = sr.x_opt;
    int backtracks = 0;
    ScaState next;
    bool accepted = false;
    for (; backtracks <= 60; ++backtracks) {
      if (sub.min_slack(x_new) > 0.0) {
        const OptVars cand = L.unpack(x_new);
        if (check_constraints(ctx, cand).strictly_feasible) {
          next = make_state(ctx, cand, it);
          if (build_subproblem(ctx, next).min_slack(x_new) > 0.0) {
            accepted = true;
            break;
          }
        }
      }
      x_new = state.x + 0.5 * (x_new - state.x);
    }
    double surrogate = accepted ? sub.objective(x_new) : at_current;
    if (!accepted || surrogate < at_current) {
      // no usable progress; keep the current point
      next = state;
      next.n = it;
      surrogate = at_current;
    }
    next.objective_trace = std::move(state.objective_trace);
    state = std::move(next);

    IterationRecord r = make_record(ctx, it, surrogate, state.iterate);
    r.newton_iters = sr.newton_iters;
    r.backtracks = backtracks;
    state.objective_trace.push_back(r.true_obj);
    res.trace.push_back(r);
    if (observer) observer(state, r);
    res.iterations = it;

    if (std::abs(surrogate - surrogate_prev) <= opt.tol) {
      res.converged = true;
      break;
    }
    surrogate_prev = surrogate;
  }

  res.vars = state.iterate;
  res.report = evaluate_report(beams, channels, cfg, q, res.vars);
  return res;
}

void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& trace) {
  CsvWriter w(os);
  w.row("iter", "surrogate_obj_bpshz", "true_obj_bpshz", "max_cdl_violation",
        "max_cul_violation", "max_pd_violation");
  for (const auto& r : trace)
    w.row(r.iter, r.surrogate_obj, r.true_obj, r.max_cdl_violation, r.max_cul_violation,
          r.max_pd_violation);
}

}  // namespace nafd
