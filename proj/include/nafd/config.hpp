#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace nafd {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// System and solver parameters. Defaults are the baseline
/// scenario (6/6 RAUs, 4/4 users, M=6, N_RF=3, L=6, 28 GHz, 100 MHz).
///
/// Fields suffixed _dbm/_db are as configured; the linear (mW) values used by
/// every computation are cached in `lin` by validate() and never recomputed.
struct SystemConfig {
  int n_trau = 6;
  int n_rrau = 6;
  int n_dl_users = 4;
  int n_ul_users = 4;
  int antennas_per_rau = 6;
  int rf_chains = 3;
  int n_paths = 6;
  double radius_m = 60.0;
  double protection_m = 5.0;
  double carrier_hz = 28e9;
  double bandwidth_hz = 100e6;
  double noise_figure_db = 9.0;
  double pathloss_exp = 2.92;
  double shadow_sigma_db = 8.7;
  double ref_dist_m = 1.0;
  double p_dl_max_dbm = 30.0;
  double p_ul_max_dbm = 27.0;
  double residual_iri_dbm = -105.0;
  int dac_bits = 1;
  double c_dl_bpshz = 26.0;
  double c_ul_bpshz = 26.0;
  double weight_dl = 0.5;
  double weight_ul = 0.5;
  std::uint64_t seed = 1;
  double sca_tol = 1e-3;
  int sca_max_iter = 200;

  struct Linear {
    double p_dl_max = 0.0;    // mW
    double p_ul_max = 0.0;    // mW
    double noise = 0.0;       // mW, sigma_k^2 = sigma_z^2
    double residual_iri = 0.0;  // per-entry variance of the residual IRI matrix
  } lin;

  /// Checks every invariant and fills `lin`. Throws ConfigError naming the
  /// violated invariant.
  void validate();
};

/// -174 dBm/Hz + 10 log10(B) + NF
double noise_power_dbm(const SystemConfig& cfg);

SystemConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SystemConfig& cfg);

/// Reads a flat JSON object; missing keys take their defaults, unknown keys are
/// rejected. An empty file is accepted as an all-defaults config.
SystemConfig load_config(const std::filesystem::path& path);

}  // namespace nafd
