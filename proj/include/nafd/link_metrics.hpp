#pragma once

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nafd/beamforming.hpp"
#include "nafd/channel.hpp"
#include "nafd/config.hpp"
#include "nafd/quant.hpp"
#include "nafd/types.hpp"

namespace nafd {

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optimization variables. Powers and variances are linear (mW).
struct OptVars {
  std::vector<double> eta;        // [k] downlink power coefficients
  std::vector<double> sigma2_dl;  // [m] downlink compression noise variance
  std::vector<double> sigma2_ul;  // [z] uplink compression noise variance
  std::vector<double> p_ul;       // [j] uplink transmit power
};

/// Flat ordering of OptVars used by the solver: eta, sigma2_dl, sigma2_ul, p_ul.
struct VarLayout {
  int n_dl = 0, n_trau = 0, n_rrau = 0, n_ul = 0;

  static VarLayout from(const SystemConfig& cfg) {
    return {cfg.n_dl_users, cfg.n_trau, cfg.n_rrau, cfg.n_ul_users};
  }
  int eta(int k) const { return k; }
  int sigma2_dl(int m) const { return n_dl + m; }
  int sigma2_ul(int z) const { return n_dl + n_trau + z; }
  int p_ul(int j) const { return n_dl + n_trau + n_rrau + j; }
  int size() const { return n_dl + n_trau + n_rrau + n_ul; }

  RVec pack(const OptVars& v) const;
  OptVars unpack(const RVec& x) const;
};

struct RateReport {
  std::vector<double> r_dl;  // bps/Hz
  std::vector<double> r_ul;  // bps/Hz
  std::vector<double> c_dl;  // bps/Hz
  std::vector<double> c_ul;  // bps/Hz
  std::vector<double> p_dl;  // mW
  double objective = 0.0;    // w_D sum r_dl + w_U sum r_ul

  double sum_dl() const;
  double sum_ul() const;
};

/// Block-diagonal covariance of the total downlink distortion:
/// block m = rho(1-rho) diag(F_m eta F_m^H) + (1-rho) sigma2_dl[m] I.
CMat quant_covariance(const std::vector<CMat>& f, const OptVars& vars, const QuantModel& q);

double downlink_rate(int k, const BeamformerSet& beams, const OptVars& vars,
                     const QuantModel& q, const ChannelSet& ch, const SystemConfig& cfg);

double uplink_rate(int j, const BeamformerSet& beams, const OptVars& vars,
                   const QuantModel& q, const ChannelSet& ch, const SystemConfig& cfg);

/// log2 det(sum_k f f^H eta_k + s2 I) - log2 det(s2 I), via Hermitian eigenvalues.
double fronthaul_dl(int m, const BeamformerSet& beams, const OptVars& vars);

double fronthaul_ul(int z, const BeamformerSet& beams, const OptVars& vars,
                    const QuantModel& q, const ChannelSet& ch, const SystemConfig& cfg);

/// Expected squared norm of the quantized, analog-precoded T-RAU output.
double transmit_power(int m, const BeamformerSet& beams, const OptVars& vars,
                      const QuantModel& q);

RateReport evaluate_report(const BeamformerSet& beams, const ChannelSet& ch,
                           const SystemConfig& cfg, const QuantModel& q,
                           const OptVars& vars);

/// log det of a Hermitian positive definite matrix (natural log).
double logdet_hermitian(const CMat& a);

/// Every SINR numerator/denominator and every transmit power is affine in the
/// flat variable vector; this caches those coefficients for one realization.
/// Rows are row-major with `n` columns.
struct AffineRows {
  int rows = 0;
  int n = 0;
  std::vector<double> coeff;     // rows * n
  std::vector<double> constant;  // rows

  const double* row(int r) const { return coeff.data() + static_cast<std::size_t>(r) * n; }
  double* row(int r) { return coeff.data() + static_cast<std::size_t>(r) * n; }
  void eval(const double* x, double* out) const;
};

struct LinkModel {
  VarLayout layout;
  double weight_dl = 0.5;
  double weight_ul = 0.5;
  AffineRows dl_signal;    // [k] (1-rho)^2 eta_k
  AffineRows dl_interf;    // [k] h^H Cq h + sum |t|^2 P_U + noise
  AffineRows ul_signal;    // [j] P_U,j |v^H gbar|^2
  AffineRows ul_interf;    // [j] A + B + C + D
  AffineRows p_dl;         // [m] transmit power

  static LinkModel build(const BeamformerSet& beams, const ChannelSet& ch,
                         const SystemConfig& cfg, const QuantModel& q);

  /// Weighted objective (bps/Hz) and per-user rates.
  double objective(const RVec& x, std::vector<double>* r_dl = nullptr,
                   std::vector<double>* r_ul = nullptr) const;
};

}  // namespace nafd
