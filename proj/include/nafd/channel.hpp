#pragma once

#include <ostream>
#include <vector>

#include "nafd/config.hpp"
#include "nafd/layout.hpp"
#include "nafd/rng.hpp"
#include "nafd/types.hpp"

namespace nafd {

/// Linear large-scale power gains.
struct LargeScale {
  Grid<double> beta_dl;   // [k][m]  DL user k <- T-RAU m
  Grid<double> beta_ul;   // [j][z]  UL user j -> R-RAU z
  Grid<double> beta_iri;  // [m][z]  T-RAU m -> R-RAU z
  Grid<double> beta_iui;  // [k][j]  UL user j -> DL user k
};

struct ChannelSet {
  Grid<CVec> h_dl;         // [k][m], length M
  Grid<CVec> g_ul;         // [j][z], length M
  Grid<CMat> h_iri_resid;  // [m][z], M x M, i.i.d. CN(0, residual_iri)
  Grid<cd> t_iui;          // [k][j]
  LargeScale large_scale;
  Grid<std::vector<double>> aod_dl;  // [k][m][l]
  Grid<std::vector<double>> aoa_ul;  // [j][z][l]
  // Populated only by draw_iri_channel(); the simulation path never needs the
  // pre-cancellation IRI channel.
  Grid<std::vector<double>> aoa_iri;
  Grid<std::vector<double>> aod_iri;

  int n_dl() const { return static_cast<int>(h_dl.size()); }
  int n_ul() const { return static_cast<int>(g_ul.size()); }
};

/// Half-wavelength ULA response: entry p is exp(j*pi*p*sin(theta)) / sqrt(M).
CVec steering_vector(double theta, int m_antennas);

/// Free-space loss at d0 for the configured carrier.
double free_space_loss_db(const SystemConfig& cfg);

/// PL(d0) + 10 xi log10(d/d0) + X, X ~ N(0, shadow_sigma^2). Distances below
/// d0 are clamped to d0 (a warning is printed once per process).
double pathloss_db(double d, const SystemConfig& cfg, Rng& rng);

LargeScale draw_large_scale(const Layout& layout, const SystemConfig& cfg, Rng& rng);

/// Sum over L paths of alpha_l * v(theta_l), alpha_l ~ CN(0, beta),
/// theta_l ~ U(-pi, pi). With `conjugate_gains` the gains enter conjugated
/// (downlink vectors are defined through their Hermitian transpose).
CVec draw_multipath_vector(double beta, int n_paths, int m_antennas, Rng& rng,
                           bool conjugate_gains, std::vector<double>* angles);

ChannelSet draw_channels(const Layout& layout, const SystemConfig& cfg, Rng& rng);

/// Full multipath T-RAU -> R-RAU matrix sum_l alpha_l v(theta_r) v(theta_t)^H.
/// Provided for completeness; only the residual after cancellation is used.
CMat draw_iri_channel(double beta, int n_paths, int m_antennas, Rng& rng,
                      std::vector<double>* aoa, std::vector<double>* aod);

/// Regression-fixture dump: family,trial,i,j,entry,re,im
void write_channels_csv(std::ostream& os, const ChannelSet& ch, int trial);

}  // namespace nafd
