#include "nafd/link_metrics.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "nafd/kernels/kernels.hpp"

namespace nafd {

RVec VarLayout::pack(const OptVars& v) const {
  RVec x(size());
  for (int k = 0; k < n_dl; ++k) x[eta(k)] = v.eta[k];
  for (int m = 0; m < n_trau; ++m) x[sigma2_dl(m)] = v.sigma2_dl[m];
  for (int z = 0; z < n_rrau; ++z) x[sigma2_ul(z)] = v.sigma2_ul[z];
  for (int j = 0; j < n_ul; ++j) x[p_ul(j)] = v.p_ul[j];
  return x;
}

OptVars VarLayout::unpack(const RVec& x) const {
  OptVars v;
  for (int k = 0; k < n_dl; ++k) v.eta.push_back(x[eta(k)]);
  for (int m = 0; m < n_trau; ++m) v.sigma2_dl.push_back(x[sigma2_dl(m)]);
  for (int z = 0; z < n_rrau; ++z) v.sigma2_ul.push_back(x[sigma2_ul(z)]);
  for (int j = 0; j < n_ul; ++j) v.p_ul.push_back(x[p_ul(j)]);
  return v;
}

double RateReport::sum_dl() const { return std::accumulate(r_dl.begin(), r_dl.end(), 0.0); }
double RateReport::sum_ul() const { return std::accumulate(r_ul.begin(), r_ul.end(), 0.0); }

double logdet_hermitian(const CMat& a) {
  Eigen::SelfAdjointEigenSolver<CMat> es(a, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double lam = es.eigenvalues()[i];
    if (!(lam > 0.0)) throw MetricError("log-det of a matrix that is not positive definite");
    s += std::log(lam);
  }
  return s;
}

namespace {

CVec eta_vec(const OptVars& v) {
  CVec e(static_cast<Eigen::Index>(v.eta.size()));
  for (std::size_t k = 0; k < v.eta.size(); ++k) e[k] = v.eta[k];
  return e;
}

// F_m diag(eta) F_m^H
CMat weighted_gram(const CMat& f, const OptVars& vars) {
  return f * eta_vec(vars).asDiagonal() * f.adjoint();
}

CMat stacked_residual(const BeamformerSet& beams, int z) {
  const int NT = static_cast<int>(beams.w_analog.size());
  const int n_rf = beams.n_rf();
  CMat g(NT * n_rf, n_rf);
  for (int m = 0; m < NT; ++m) g.middleRows(m * n_rf, n_rf) = beams.g_resid[m][z];
  return g;
}

}  // namespace

CMat quant_covariance(const std::vector<CMat>& f, const OptVars& vars, const QuantModel& q) {
  const double rho = q.rho;
  const int NT = static_cast<int>(f.size());
  const int n_rf = NT > 0 ? static_cast<int>(f[0].rows()) : 0;
  CMat cq = CMat::Zero(NT * n_rf, NT * n_rf);
  for (int m = 0; m < NT; ++m) {
    const CMat gram = weighted_gram(f[m], vars);
    for (int p = 0; p < n_rf; ++p)
      cq(m * n_rf + p, m * n_rf + p) =
          rho * (1.0 - rho) * gram(p, p).real() + (1.0 - rho) * vars.sigma2_dl[m];
  }
  return cq;
}

double downlink_rate(int k, const BeamformerSet& beams, const OptVars& vars,
                     const QuantModel& q, const ChannelSet& ch, const SystemConfig& cfg) {
  const double rho = q.rho;
  const CMat cq = quant_covariance(beams.f_digital, vars, q);
  const CVec& hk = beams.h_eff[k];
  double denom = (hk.adjoint() * cq * hk)(0, 0).real() + cfg.lin.noise;
  for (std::size_t j = 0; j < vars.p_ul.size(); ++j)
    denom += std::norm(ch.t_iui[k][j]) * vars.p_ul[j];
  if (!(denom > 0.0)) throw MetricError("non-positive downlink interference-plus-noise");
  return std::log2(1.0 + (1.0 - rho) * (1.0 - rho) * vars.eta[k] / denom);
}

double uplink_rate(int j, const BeamformerSet& beams, const OptVars& vars,
                   const QuantModel& q, const ChannelSet& ch, const SystemConfig& cfg) {
  (void)ch;
  const double rho = q.rho;
  const int z = beams.assoc[j];
  const CVec& v = beams.v_rx[j];
  const int NT = static_cast<int>(beams.f_digital.size());

  double a = 0.0;
  for (int m = 0; m < NT; ++m) {
    const CVec gv = beams.g_resid[m][z] * v;  // (v^H G^H)^H
    const CVec proj = beams.f_digital[m].adjoint() * gv;
    for (Eigen::Index k = 0; k < proj.size(); ++k) a += vars.eta[k] * std::norm(proj[k]);
  }
  a *= (1.0 - rho) * (1.0 - rho);
  const CVec gzv = stacked_residual(beams, z) * v;
  const double b = (gzv.adjoint() * quant_covariance(beams.f_digital, vars, q) * gzv)(0, 0).real();
  const double c = cfg.lin.noise * (beams.u_analog[z] * v).squaredNorm();
  const double d = vars.sigma2_ul[z] * v.squaredNorm();
  const double denom = a + b + c + d;
  if (!(denom > 0.0)) throw MetricError("zero uplink interference-plus-noise");
  const double sig = vars.p_ul[j] * std::norm(v.dot(beams.g_eff[j][z]));
  return std::log2(1.0 + sig / denom);
}

double fronthaul_dl(int m, const BeamformerSet& beams, const OptVars& vars) {
  const double s2 = vars.sigma2_dl[m];
  if (!(s2 > 0.0)) throw MetricError("downlink compression variance must be positive");
  const CMat& f = beams.f_digital[m];
  const int n_rf = static_cast<int>(f.rows());
  CMat a = weighted_gram(f, vars);
  a.diagonal().array() += s2;
  return (logdet_hermitian(a) - n_rf * std::log(s2)) / std::log(2.0);
}

double fronthaul_ul(int z, const BeamformerSet& beams, const OptVars& vars,
                    const QuantModel& q, const ChannelSet& ch, const SystemConfig& cfg) {
  (void)ch;
  const double s2 = vars.sigma2_ul[z];
  if (!(s2 > 0.0)) throw MetricError("uplink compression variance must be positive");
  const CMat& u = beams.u_analog[z];
  const int n_rf = static_cast<int>(u.cols());
  double pd_sum = 0.0;
  for (std::size_t m = 0; m < beams.w_analog.size(); ++m)
    pd_sum += transmit_power(static_cast<int>(m), beams, vars, q);

  CMat b = (cfg.lin.residual_iri * pd_sum + cfg.lin.noise) * (u.adjoint() * u);
  for (std::size_t j = 0; j < vars.p_ul.size(); ++j) {
    const CVec& g = beams.g_eff[j][z];
    b += vars.p_ul[j] * g * g.adjoint();
  }
  b.diagonal().array() += s2;
  return (logdet_hermitian(b) - n_rf * std::log(s2)) / std::log(2.0);
}

double transmit_power(int m, const BeamformerSet& beams, const OptVars& vars,
                      const QuantModel& q) {
  const double rho = q.rho;
  const CMat& w = beams.w_analog[m];
  const CMat gram = weighted_gram(beams.f_digital[m], vars);
  const CMat diag_gram = gram.diagonal().asDiagonal();
  const double t1 = (w * gram * w.adjoint()).trace().real();
  const double t2 = (w * diag_gram * w.adjoint()).trace().real();
  const double t3 = (w * w.adjoint()).trace().real();
  return (1.0 - rho) * (1.0 - rho) * t1 + rho * (1.0 - rho) * t2 +
         (1.0 - rho) * vars.sigma2_dl[m] * t3;
}

RateReport evaluate_report(const BeamformerSet& beams, const ChannelSet& ch,
                           const SystemConfig& cfg, const QuantModel& q,
                           const OptVars& vars) {
  RateReport r;
  for (int k = 0; k < cfg.n_dl_users; ++k) r.r_dl.push_back(downlink_rate(k, beams, vars, q, ch, cfg));
  for (int j = 0; j < cfg.n_ul_users; ++j) r.r_ul.push_back(uplink_rate(j, beams, vars, q, ch, cfg));
  for (int m = 0; m < cfg.n_trau; ++m) {
    r.c_dl.push_back(fronthaul_dl(m, beams, vars));
    r.p_dl.push_back(transmit_power(m, beams, vars, q));
  }
  for (int z = 0; z < cfg.n_rrau; ++z) r.c_ul.push_back(fronthaul_ul(z, beams, vars, q, ch, cfg));
  r.objective = cfg.weight_dl * r.sum_dl() + cfg.weight_ul * r.sum_ul();
  return r;
}

void AffineRows::eval(const double* x, double* out) const {
  kernels::active().gemv_rows(coeff.data(), rows, n, n, x, constant.data(), out);
}

namespace {

AffineRows make_rows(int rows, int n) {
  AffineRows a;
  a.rows = rows;
  a.n = n;
  a.coeff.assign(static_cast<std::size_t>(rows) * n, 0.0);
  a.constant.assign(rows, 0.0);
  return a;
}

}  // namespace

LinkModel LinkModel::build(const BeamformerSet& beams, const ChannelSet& ch,
                           const SystemConfig& cfg, const QuantModel& q) {
  const double rho = q.rho;
  const double a_sig = (1.0 - rho) * (1.0 - rho);
  const double a_q = rho * (1.0 - rho);
  const double a_c = 1.0 - rho;
  LinkModel lm;
  lm.layout = VarLayout::from(cfg);
  lm.weight_dl = cfg.weight_dl;
  lm.weight_ul = cfg.weight_ul;
  const VarLayout& L = lm.layout;
  const int n = L.size();
  const int K = L.n_dl, J = L.n_ul, NT = L.n_trau;
  const int n_rf = beams.n_rf();

  // |F_{m,p,i}|^2
  std::vector<RMat> f_abs2(NT);
  for (int m = 0; m < NT; ++m) f_abs2[m] = beams.f_digital[m].cwiseAbs2();

  lm.dl_signal = make_rows(K, n);
  lm.dl_interf = make_rows(K, n);
  for (int k = 0; k < K; ++k) {
    lm.dl_signal.row(k)[L.eta(k)] = a_sig;
    double* row = lm.dl_interf.row(k);
    for (int m = 0; m < NT; ++m) {
      const CVec hb = beams.h_eff[k].segment(m * n_rf, n_rf);
      for (int p = 0; p < n_rf; ++p) {
        const double h2 = std::norm(hb[p]);
        for (int i = 0; i < K; ++i) row[L.eta(i)] += a_q * h2 * f_abs2[m](p, i);
      }
      row[L.sigma2_dl(m)] += a_c * kernels::sum_abs2({hb.data(), static_cast<std::size_t>(n_rf)});
    }
    for (int j = 0; j < J; ++j) row[L.p_ul(j)] += std::norm(ch.t_iui[k][j]);
    lm.dl_interf.constant[k] = cfg.lin.noise;
  }

  lm.ul_signal = make_rows(J, n);
  lm.ul_interf = make_rows(J, n);
  for (int j = 0; j < J; ++j) {
    const int z = beams.assoc[j];
    const CVec& v = beams.v_rx[j];
    lm.ul_signal.row(j)[L.p_ul(j)] = std::norm(v.dot(beams.g_eff[j][z]));
    double* row = lm.ul_interf.row(j);
    for (int m = 0; m < NT; ++m) {
      const CVec gv = beams.g_resid[m][z] * v;
      const CVec proj = beams.f_digital[m].adjoint() * gv;
      for (int k = 0; k < K; ++k) {
        double acc = a_sig * std::norm(proj[k]);
        for (int p = 0; p < n_rf; ++p) acc += a_q * std::norm(gv[p]) * f_abs2[m](p, k);
        row[L.eta(k)] += acc;
      }
      row[L.sigma2_dl(m)] += a_c * gv.squaredNorm();
    }
    row[L.sigma2_ul(z)] += v.squaredNorm();
    lm.ul_interf.constant[j] = cfg.lin.noise * (beams.u_analog[z] * v).squaredNorm();
  }

  lm.p_dl = make_rows(NT, n);
  for (int m = 0; m < NT; ++m) {
    const CMat& w = beams.w_analog[m];
    const CMat wf = w * beams.f_digital[m];
    double* row = lm.p_dl.row(m);
    for (int k = 0; k < K; ++k) {
      double acc = a_sig * wf.col(k).squaredNorm();
      for (int p = 0; p < n_rf; ++p) acc += a_q * w.col(p).squaredNorm() * f_abs2[m](p, k);
      row[L.eta(k)] = acc;
    }
    row[L.sigma2_dl(m)] = a_c * w.squaredNorm();
  }
  return lm;
}

double LinkModel::objective(const RVec& x, std::vector<double>* r_dl,
                            std::vector<double>* r_ul) const {
  const int K = layout.n_dl, J = layout.n_ul;
  std::vector<double> s(std::max(K, J)), i(std::max(K, J));
  double obj = 0.0;
  if (r_dl) r_dl->assign(K, 0.0);
  if (r_ul) r_ul->assign(J, 0.0);
  dl_signal.eval(x.data(), s.data());
  dl_interf.eval(x.data(), i.data());
  for (int k = 0; k < K; ++k) {
    const double r = std::log2(1.0 + s[k] / i[k]);
    if (r_dl) (*r_dl)[k] = r;
    obj += weight_dl * r;
  }
  ul_signal.eval(x.data(), s.data());
  ul_interf.eval(x.data(), i.data());
  for (int j = 0; j < J; ++j) {
    const double r = std::log2(1.0 + s[j] / i[j]);
    if (r_ul) (*r_ul)[j] = r;
    obj += weight_ul * r;
  }
  return obj;
}

}  // namespace nafd
