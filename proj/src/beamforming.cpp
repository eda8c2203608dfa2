#include "nafd/beamforming.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SVD>

namespace nafd {

CMat project_constant_modulus(const CMat& a) {
  const double mag = 1.0 / std::sqrt(static_cast<double>(a.rows()));
  CMat out(a.rows(), a.cols());
  for (Eigen::Index c = 0; c < a.cols(); ++c)
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      const cd v = a(r, c);
      // Zero entries carry no phase information; keep phase 0.
      out(r, c) = std::abs(v) > 0.0 ? mag * v / std::abs(v) : cd(mag, 0.0);
    }
  return out;
}

CMat alternating_projection(const CMat& target, int iterations,
                            std::vector<double>* distance_trace,
                            std::vector<CMat>* iterates) {
  CMat w = project_constant_modulus(target);
  for (int it = 0; it < iterations; ++it) {
    // Closest T Q to W over unitary Q: Q = polar factor of T^H W.
    const CMat c = target.adjoint() * w;
    Eigen::JacobiSVD<CMat> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const CMat q = svd.matrixU() * svd.matrixV().adjoint();
    const CMat z = target * q;
    if (distance_trace) distance_trace->push_back((w - z).norm());
    w = project_constant_modulus(z);
    if (iterates) iterates->push_back(w);
  }
  return w;
}

CMat dominant_subspace(const std::vector<CVec>& columns, int m_antennas, int n_rf) {
  CMat a(m_antennas, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i) a.col(i) = columns[i];
  Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeFullU);
  return svd.matrixU().leftCols(n_rf);
}

namespace {

CMat analog_for(const std::vector<CVec>& cols, int M, int n_rf) {
  if (cols.empty())
    return CMat::Constant(M, n_rf, cd(1.0 / std::sqrt(static_cast<double>(M)), 0.0));
  return alternating_projection(dominant_subspace(cols, M, n_rf), kAnalogIterations);
}

}  // namespace

AnalogDesign design_analog(const ChannelSet& ch, const SystemConfig& cfg) {
  const int M = cfg.antennas_per_rau;
  const int n_rf = cfg.rf_chains;
  const int K = ch.n_dl();
  const int J = ch.n_ul();
  AnalogDesign out;
  for (int m = 0; m < cfg.n_trau; ++m) {
    std::vector<CVec> cols;
    for (int k = 0; k < K; ++k) cols.push_back(ch.h_dl[k][m]);
    out.w.push_back(analog_for(cols, M, n_rf));
  }
  for (int z = 0; z < cfg.n_rrau; ++z) {
    std::vector<CVec> cols;
    for (int j = 0; j < J; ++j) cols.push_back(ch.g_ul[j][z]);
    out.u.push_back(analog_for(cols, M, n_rf));
  }
  return out;
}

DigitalDesign design_digital_zf(const ChannelSet& ch, const std::vector<CMat>& w) {
  const int K = ch.n_dl();
  const int NT = static_cast<int>(w.size());
  const int n_rf = NT > 0 ? static_cast<int>(w[0].cols()) : 0;
  const int dim = NT * n_rf;

  DigitalDesign out;
  out.h_eff.resize(K);
  out.h_stacked.resize(K, dim);
  for (int k = 0; k < K; ++k) {
    CVec hk(dim);
    for (int m = 0; m < NT; ++m) hk.segment(m * n_rf, n_rf) = w[m].adjoint() * ch.h_dl[k][m];
    out.h_eff[k] = hk;
    out.h_stacked.row(k) = hk.adjoint();
  }

  out.f_stacked = CMat::Zero(dim, K);
  if (K > 0) {
    Eigen::JacobiSVD<CMat> svd(out.h_stacked, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double smax = s(0);
    const double smin = s(s.size() - 1);
    if (s.size() < K || !(smax > 0.0) || smin < 1e-10 * smax) {
      // Users carrying weight in the weakest left singular direction.
      std::vector<int> users;
      const CVec u = svd.matrixU().col(s.size() - 1);
      for (int k = 0; k < K; ++k)
        if (std::abs(u[k]) > 1e-3) users.push_back(k);
      std::ostringstream msg;
      msg << "stacked downlink channel is rank deficient (users";
      for (int k : users) msg << ' ' << k;
      msg << ")";
      throw DegenerateChannelError(msg.str(), users);
    }
    RVec inv = s.cwiseInverse();
    out.f_stacked = svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
  }
  for (int m = 0; m < NT; ++m) out.f.push_back(out.f_stacked.middleRows(m * n_rf, n_rf));
  return out;
}

UplinkReceive associate_and_receive(const ChannelSet& ch, const std::vector<CMat>& u) {
  const int J = ch.n_ul();
  const int NR = static_cast<int>(u.size());
  UplinkReceive out;
  out.g_eff = make_grid<CVec>(J, NR);
  for (int j = 0; j < J; ++j)
    for (int z = 0; z < NR; ++z) out.g_eff[j][z] = u[z].adjoint() * ch.g_ul[j][z];

  for (int j = 0; j < J; ++j) {
    int best = 0;
    for (int z = 1; z < NR; ++z)
      if (ch.large_scale.beta_ul[j][z] > ch.large_scale.beta_ul[j][best]) best = z;
    const CVec& g = out.g_eff[j][best];
    const double n2 = g.squaredNorm();
    if (!(n2 > 0.0))
      throw DegenerateChannelError("uplink effective channel of user " +
                                       std::to_string(j) + " is zero",
                                   {j});
    out.assoc.push_back(best);
    out.v_rx.push_back(g / n2);
  }
  return out;
}

BeamformerSet build_beamformers(const ChannelSet& ch, const SystemConfig& cfg) {
  AnalogDesign analog = design_analog(ch, cfg);
  DigitalDesign digital = design_digital_zf(ch, analog.w);
  UplinkReceive rx = associate_and_receive(ch, analog.u);

  BeamformerSet b;
  const int NT = cfg.n_trau;
  const int NR = cfg.n_rrau;
  b.g_resid = make_grid<CMat>(NT, NR);
  for (int m = 0; m < NT; ++m)
    for (int z = 0; z < NR; ++z)
      b.g_resid[m][z] = analog.w[m].adjoint() * ch.h_iri_resid[m][z].adjoint() * analog.u[z];
  b.w_analog = std::move(analog.w);
  b.u_analog = std::move(analog.u);
  b.f_digital = std::move(digital.f);
  b.h_eff = std::move(digital.h_eff);
  b.g_eff = std::move(rx.g_eff);
  b.v_rx = std::move(rx.v_rx);
  b.assoc = std::move(rx.assoc);
  return b;
}

}  // namespace nafd
