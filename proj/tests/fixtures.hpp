#pragma once

// Shared helpers for the unit tests: small configs, random realizations,
// random feasible-looking variables, hand-built scalar systems.

#include <cmath>
#include <random>

#include "nafd/beamforming.hpp"
#include "nafd/channel.hpp"
#include "nafd/config.hpp"
#include "nafd/harness.hpp"
#include "nafd/layout.hpp"
#include "nafd/link_metrics.hpp"
#include "nafd/rng.hpp"

namespace fx {

using namespace nafd;

inline SystemConfig baseline() {
  SystemConfig c;
  c.validate();
  return c;
}

/// N_T = N_R = 1, K = J = 1, N_RF = 1, M = 2.
inline SystemConfig tiny() {
  SystemConfig c;
  c.n_trau = c.n_rrau = 1;
  c.n_dl_users = c.n_ul_users = 1;
  c.rf_chains = 1;
  c.antennas_per_rau = 2;
  c.validate();
  return c;
}

inline Realization realization(const SystemConfig& cfg, std::uint64_t seed, int trial = 0,
                               DuplexMode mode = DuplexMode::NAFD) {
  return draw_realization(cfg, mode, seed, trial);
}

/// Variables spread over a few decades around plausible operating values.
inline OptVars random_vars(const SystemConfig& cfg, Rng& rng) {
  auto logu = [&](double lo, double hi) {
    return std::exp(std::log(lo) + uniform01(rng) * (std::log(hi) - std::log(lo)));
  };
  OptVars v;
  for (int k = 0; k < cfg.n_dl_users; ++k) v.eta.push_back(logu(1e-12, 1e-6));
  for (int m = 0; m < cfg.n_trau; ++m) v.sigma2_dl.push_back(logu(1e-12, 1e-6));
  for (int z = 0; z < cfg.n_rrau; ++z) v.sigma2_ul.push_back(logu(1e-12, 1e-6));
  for (int j = 0; j < cfg.n_ul_users; ++j) v.p_ul.push_back(logu(1e-2, cfg.lin.p_ul_max));
  return v;
}

/// Points near where the optimizer operates: eta puts the busiest T-RAU at
/// 1-100% of its budget, sigma2_dl sits 0-60 dB below the per-chain power,
/// sigma2_ul within a few decades of the noise floor.
inline OptVars operating_vars(const SystemConfig& cfg, const BeamformerSet& beams, Rng& rng) {
  auto logu = [&](double lo, double hi) {
    return std::exp(std::log(lo) + uniform01(rng) * (std::log(hi) - std::log(lo)));
  };
  OptVars v;
  for (int k = 0; k < cfg.n_dl_users; ++k) v.eta.push_back(logu(1e-2, 1.0));
  v.sigma2_dl.assign(cfg.n_trau, 0.0);
  double pmax = 0.0;
  for (int m = 0; m < cfg.n_trau; ++m)
    pmax = std::max(pmax, transmit_power(m, beams, v, QuantModel::with_rho(0.0)));
  const double scale = logu(1e-2, 1.0) * cfg.lin.p_dl_max / pmax;
  for (double& e : v.eta) e *= scale;
  for (int m = 0; m < cfg.n_trau; ++m)
    v.sigma2_dl[m] = logu(1e-6, 1.0) * cfg.lin.p_dl_max / (cfg.rf_chains * cfg.antennas_per_rau);
  for (int z = 0; z < cfg.n_rrau; ++z) v.sigma2_ul.push_back(cfg.lin.noise * logu(1e-2, 1e3));
  for (int j = 0; j < cfg.n_ul_users; ++j) v.p_ul.push_back(logu(1e-2, cfg.lin.p_ul_max));
  return v;
}

inline CMat random_cmat(int r, int c, Rng& rng, double var = 1.0) {
  CMat a(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) a(i, j) = complex_gaussian(rng, var);
  return a;
}

inline CVec random_cvec(int n, Rng& rng, double var = 1.0) {
  CVec a(n);
  for (int i = 0; i < n; ++i) a[i] = complex_gaussian(rng, var);
  return a;
}

/// One T-RAU, one R-RAU, one user each way, M = N_RF = 1, all gains chosen
/// by the caller. Residual IRI and IUI default to zero.
struct ScalarSystem {
  SystemConfig cfg;
  ChannelSet ch;
  BeamformerSet beams;

  ScalarSystem(cd h, cd g, cd f, double noise) {
    cfg.n_trau = cfg.n_rrau = cfg.n_dl_users = cfg.n_ul_users = 1;
    cfg.antennas_per_rau = cfg.rf_chains = 1;
    cfg.validate();
    cfg.lin.noise = noise;
    cfg.lin.residual_iri = 0.0;
    ch.h_dl = make_grid<CVec>(1, 1, CVec::Constant(1, h));
    ch.g_ul = make_grid<CVec>(1, 1, CVec::Constant(1, g));
    ch.h_iri_resid = make_grid<CMat>(1, 1, CMat::Zero(1, 1));
    ch.t_iui = make_grid<cd>(1, 1, cd(0.0));
    beams.w_analog = {CMat::Ones(1, 1)};
    beams.u_analog = {CMat::Ones(1, 1)};
    beams.f_digital = {CMat::Constant(1, 1, f)};
    beams.h_eff = {CVec::Constant(1, h)};
    beams.g_eff = make_grid<CVec>(1, 1, CVec::Constant(1, g));
    beams.g_resid = make_grid<CMat>(1, 1, CMat::Zero(1, 1));
    beams.v_rx = {CVec::Constant(1, g / std::norm(g))};
    beams.assoc = {0};
  }
};

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace fx
