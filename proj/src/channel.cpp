#include "nafd/channel.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>

#include "nafd/csv.hpp"

namespace nafd {
namespace {

constexpr double kSpeedOfLight = 299792458.0;

void warn_clamped(double d, double d0) {
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true)) {
    std::cerr << "warning: link distance " << d << " m below reference distance "
              << d0 << " m, clamped (reported once)\n";
  }
}

double uniform_angle(Rng& rng) {
  return std::uniform_real_distribution<double>(-std::numbers::pi,
                                                std::numbers::pi)(rng);
}

double beta_for(double d, const SystemConfig& cfg, Rng& rng) {
  return db_to_linear(-pathloss_db(d, cfg, rng));
}

}  // namespace

CVec steering_vector(double theta, int m_antennas) {
  CVec v(m_antennas);
  const double s = std::sin(theta);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m_antennas));
  for (int p = 0; p < m_antennas; ++p)
    v[p] = std::polar(scale, std::numbers::pi * p * s);
  return v;
}

double free_space_loss_db(const SystemConfig& cfg) {
  const double lambda = kSpeedOfLight / cfg.carrier_hz;
  return 20.0 * std::log10(4.0 * std::numbers::pi * cfg.ref_dist_m / lambda);
}

double pathloss_db(double d, const SystemConfig& cfg, Rng& rng) {
  if (d < cfg.ref_dist_m) {
    warn_clamped(d, cfg.ref_dist_m);
    d = cfg.ref_dist_m;
  }
  double pl = free_space_loss_db(cfg) +
              10.0 * cfg.pathloss_exp * std::log10(d / cfg.ref_dist_m);
  if (cfg.shadow_sigma_db > 0.0) pl += cfg.shadow_sigma_db * gaussian(rng);
  return pl;
}

LargeScale draw_large_scale(const Layout& layout, const SystemConfig& cfg, Rng& rng) {
  const std::size_t K = layout.dl_user_xy.size();
  const std::size_t J = layout.ul_user_xy.size();
  const std::size_t NT = layout.trau_xy.size();
  const std::size_t NR = layout.rrau_xy.size();

  LargeScale ls;
  ls.beta_dl = make_grid<double>(K, NT);
  ls.beta_ul = make_grid<double>(J, NR);
  ls.beta_iri = make_grid<double>(NT, NR);
  ls.beta_iui = make_grid<double>(K, J);
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t m = 0; m < NT; ++m)
      ls.beta_dl[k][m] = beta_for(distance(layout.dl_user_xy[k], layout.trau_xy[m]), cfg, rng);
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t z = 0; z < NR; ++z)
      ls.beta_ul[j][z] = beta_for(distance(layout.ul_user_xy[j], layout.rrau_xy[z]), cfg, rng);
  for (std::size_t m = 0; m < NT; ++m)
    for (std::size_t z = 0; z < NR; ++z) {
      // Co-located CCFD pairs sit at distance 0; treat them as at d0 without
      // tripping the clamp warning.
      const double d = std::max(distance(layout.trau_xy[m], layout.rrau_xy[z]), cfg.ref_dist_m);
      ls.beta_iri[m][z] = beta_for(d, cfg, rng);
    }
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < J; ++j)
      ls.beta_iui[k][j] = beta_for(distance(layout.dl_user_xy[k], layout.ul_user_xy[j]), cfg, rng);
  return ls;
}

CVec draw_multipath_vector(double beta, int n_paths, int m_antennas, Rng& rng,
                           bool conjugate_gains, std::vector<double>* angles) {
  CVec v = CVec::Zero(m_antennas);
  if (angles) angles->clear();
  for (int l = 0; l < n_paths; ++l) {
    cd alpha = complex_gaussian(rng, beta);
    const double theta = uniform_angle(rng);
    if (conjugate_gains) alpha = std::conj(alpha);
    v += alpha * steering_vector(theta, m_antennas);
    if (angles) angles->push_back(theta);
  }
  return v;
}

ChannelSet draw_channels(const Layout& layout, const SystemConfig& cfg, Rng& rng) {
  ChannelSet ch;
  ch.large_scale = draw_large_scale(layout, cfg, rng);
  const auto& ls = ch.large_scale;
  const int K = static_cast<int>(layout.dl_user_xy.size());
  const int J = static_cast<int>(layout.ul_user_xy.size());
  const int NT = static_cast<int>(layout.trau_xy.size());
  const int NR = static_cast<int>(layout.rrau_xy.size());
  const int M = cfg.antennas_per_rau;
  const int L = cfg.n_paths;

  ch.h_dl = make_grid<CVec>(K, NT);
  ch.aod_dl = make_grid<std::vector<double>>(K, NT);
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < NT; ++m)
      ch.h_dl[k][m] = draw_multipath_vector(ls.beta_dl[k][m], L, M, rng, true,
                                            &ch.aod_dl[k][m]);

  ch.g_ul = make_grid<CVec>(J, NR);
  ch.aoa_ul = make_grid<std::vector<double>>(J, NR);
  for (int j = 0; j < J; ++j)
    for (int z = 0; z < NR; ++z)
      ch.g_ul[j][z] = draw_multipath_vector(ls.beta_ul[j][z], L, M, rng, false,
                                            &ch.aoa_ul[j][z]);

  ch.t_iui = make_grid<cd>(K, J);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < J; ++j) ch.t_iui[k][j] = complex_gaussian(rng, ls.beta_iui[k][j]);

  const double s2 = cfg.lin.residual_iri;
  ch.h_iri_resid = make_grid<CMat>(NT, NR);
  for (int m = 0; m < NT; ++m)
    for (int z = 0; z < NR; ++z) {
      CMat e(M, M);
      for (int c = 0; c < M; ++c)
        for (int r = 0; r < M; ++r) e(r, c) = complex_gaussian(rng, s2);
      ch.h_iri_resid[m][z] = std::move(e);
    }
  return ch;
}

CMat draw_iri_channel(double beta, int n_paths, int m_antennas, Rng& rng,
                      std::vector<double>* aoa, std::vector<double>* aod) {
  CMat H = CMat::Zero(m_antennas, m_antennas);
  if (aoa) aoa->clear();
  if (aod) aod->clear();
  for (int l = 0; l < n_paths; ++l) {
    const cd alpha = complex_gaussian(rng, beta);
    const double tr = uniform_angle(rng);
    const double tt = uniform_angle(rng);
    H += alpha * steering_vector(tr, m_antennas) * steering_vector(tt, m_antennas).adjoint();
    if (aoa) aoa->push_back(tr);
    if (aod) aod->push_back(tt);
  }
  return H;
}

void write_channels_csv(std::ostream& os, const ChannelSet& ch, int trial) {
  CsvWriter w(os);
  w.row("family", "trial", "i", "j", "entry", "re", "im");
  for (std::size_t k = 0; k < ch.h_dl.size(); ++k)
    for (std::size_t m = 0; m < ch.h_dl[k].size(); ++m)
      for (Eigen::Index p = 0; p < ch.h_dl[k][m].size(); ++p)
        w.row("h", trial, k, m, p, ch.h_dl[k][m][p].real(), ch.h_dl[k][m][p].imag());
  for (std::size_t j = 0; j < ch.g_ul.size(); ++j)
    for (std::size_t z = 0; z < ch.g_ul[j].size(); ++z)
      for (Eigen::Index p = 0; p < ch.g_ul[j][z].size(); ++p)
        w.row("g", trial, j, z, p, ch.g_ul[j][z][p].real(), ch.g_ul[j][z][p].imag());
  for (std::size_t m = 0; m < ch.h_iri_resid.size(); ++m)
    for (std::size_t z = 0; z < ch.h_iri_resid[m].size(); ++z) {
      const CMat& e = ch.h_iri_resid[m][z];
      for (Eigen::Index p = 0; p < e.size(); ++p)
        w.row("hres", trial, m, z, p, e.data()[p].real(), e.data()[p].imag());
    }
  for (std::size_t k = 0; k < ch.t_iui.size(); ++k)
    for (std::size_t j = 0; j < ch.t_iui[k].size(); ++j)
      w.row("t", trial, k, j, 0, ch.t_iui[k][j].real(), ch.t_iui[k][j].imag());
}

}  // namespace nafd
