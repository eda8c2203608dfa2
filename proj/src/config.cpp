#include "nafd/config.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "nafd/types.hpp"

namespace nafd {
namespace {

void require(bool ok, const std::string& invariant) {
  if (!ok) throw ConfigError("config invariant violated: " + invariant);
}

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

void SystemConfig::validate() {
  require(std::abs(weight_dl + weight_ul - 1.0) <= 1e-9,
          "weights must sum to 1 (weight_dl + weight_ul = 1)");
  require(weight_dl >= 0.0 && weight_ul >= 0.0, "weights must be non-negative");
  require(n_trau > 0 && n_rrau > 0, "RAU counts must be positive");
  require(n_dl_users >= 0 && n_ul_users >= 0 && n_dl_users + n_ul_users > 0,
          "user counts must be non-negative with at least one user");
  require(antennas_per_rau > 0 && rf_chains > 0, "antenna/RF counts must be positive");
  require(rf_chains <= antennas_per_rau, "rf_chains <= antennas_per_rau");
  require(n_paths >= 1, "n_paths >= 1");
  require(n_dl_users <= n_trau * rf_chains,
          "n_dl_users <= n_trau * rf_chains (ZF feasibility)");
  require(radius_m > 0.0 && protection_m >= 0.0, "radius_m > 0 and protection_m >= 0");
  require(protection_m < radius_m, "protection_m < radius_m");
  require(carrier_hz > 0.0 && bandwidth_hz > 0.0, "frequencies must be positive");
  require(ref_dist_m > 0.0, "ref_dist_m > 0");
  require(shadow_sigma_db >= 0.0, "shadow_sigma_db >= 0");
  require(pathloss_exp > 0.0, "pathloss_exp > 0");
  require(c_dl_bpshz > 0.0 && c_ul_bpshz > 0.0, "fronthaul capacities must be positive");
  require(dac_bits >= 1 && dac_bits <= 16, "dac_bits in [1, 16]");
  require(sca_tol > 0.0, "sca_tol > 0");
  require(sca_max_iter >= 1, "sca_max_iter >= 1");
  require(std::isfinite(p_dl_max_dbm) && std::isfinite(p_ul_max_dbm) &&
              std::isfinite(residual_iri_dbm),
          "powers must be finite");

  lin.p_dl_max = db_to_linear(p_dl_max_dbm);
  lin.p_ul_max = db_to_linear(p_ul_max_dbm);
  lin.noise = db_to_linear(noise_power_dbm(*this));
  lin.residual_iri = db_to_linear(residual_iri_dbm);
}

double noise_power_dbm(const SystemConfig& cfg) {
  return -174.0 + 10.0 * std::log10(cfg.bandwidth_hz) + cfg.noise_figure_db;
}

SystemConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  static const std::set<std::string> known = {
      "n_trau",         "n_rrau",          "n_dl_users",     "n_ul_users",
      "antennas_per_rau", "rf_chains",     "n_paths",        "radius_m",
      "protection_m",   "carrier_hz",      "bandwidth_hz",   "noise_figure_db",
      "pathloss_exp",   "shadow_sigma_db", "ref_dist_m",     "p_dl_max_dbm",
      "p_ul_max_dbm",   "residual_iri_dbm", "dac_bits",      "c_dl_bpshz",
      "c_ul_bpshz",     "weight_dl",       "weight_ul",      "seed",
      "sca_tol",        "sca_max_iter"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key()))
      throw ConfigError("unknown config key '" + item.key() + "'");
  }

  SystemConfig c;
  read_key(j, "n_trau", c.n_trau);
  read_key(j, "n_rrau", c.n_rrau);
  read_key(j, "n_dl_users", c.n_dl_users);
  read_key(j, "n_ul_users", c.n_ul_users);
  read_key(j, "antennas_per_rau", c.antennas_per_rau);
  read_key(j, "rf_chains", c.rf_chains);
  read_key(j, "n_paths", c.n_paths);
  read_key(j, "radius_m", c.radius_m);
  read_key(j, "protection_m", c.protection_m);
  read_key(j, "carrier_hz", c.carrier_hz);
  read_key(j, "bandwidth_hz", c.bandwidth_hz);
  read_key(j, "noise_figure_db", c.noise_figure_db);
  read_key(j, "pathloss_exp", c.pathloss_exp);
  read_key(j, "shadow_sigma_db", c.shadow_sigma_db);
  read_key(j, "ref_dist_m", c.ref_dist_m);
  read_key(j, "p_dl_max_dbm", c.p_dl_max_dbm);
  read_key(j, "p_ul_max_dbm", c.p_ul_max_dbm);
  read_key(j, "residual_iri_dbm", c.residual_iri_dbm);
  read_key(j, "dac_bits", c.dac_bits);
  read_key(j, "c_dl_bpshz", c.c_dl_bpshz);
  read_key(j, "c_ul_bpshz", c.c_ul_bpshz);
  read_key(j, "weight_dl", c.weight_dl);
  read_key(j, "weight_ul", c.weight_ul);
  read_key(j, "seed", c.seed);
  read_key(j, "sca_tol", c.sca_tol);
  read_key(j, "sca_max_iter", c.sca_max_iter);
  c.validate();
  return c;
}

nlohmann::json config_to_json(const SystemConfig& c) {
  return {{"n_trau", c.n_trau},
          {"n_rrau", c.n_rrau},
          {"n_dl_users", c.n_dl_users},
          {"n_ul_users", c.n_ul_users},
          {"antennas_per_rau", c.antennas_per_rau},
          {"rf_chains", c.rf_chains},
          {"n_paths", c.n_paths},
          {"radius_m", c.radius_m},
          {"protection_m", c.protection_m},
          {"carrier_hz", c.carrier_hz},
          {"bandwidth_hz", c.bandwidth_hz},
          {"noise_figure_db", c.noise_figure_db},
          {"pathloss_exp", c.pathloss_exp},
          {"shadow_sigma_db", c.shadow_sigma_db},
          {"ref_dist_m", c.ref_dist_m},
          {"p_dl_max_dbm", c.p_dl_max_dbm},
          {"p_ul_max_dbm", c.p_ul_max_dbm},
          {"residual_iri_dbm", c.residual_iri_dbm},
          {"dac_bits", c.dac_bits},
          {"c_dl_bpshz", c.c_dl_bpshz},
          {"c_ul_bpshz", c.c_ul_bpshz},
          {"weight_dl", c.weight_dl},
          {"weight_ul", c.weight_ul},
          {"seed", c.seed},
          {"sca_tol", c.sca_tol},
          {"sca_max_iter", c.sca_max_iter}};
}

SystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    SystemConfig c;
    c.validate();
    return c;
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse config '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

}  // namespace nafd
