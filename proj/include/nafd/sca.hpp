#pragma once

#include <functional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "nafd/beamforming.hpp"
#include "nafd/channel.hpp"
#include "nafd/config.hpp"
#include "nafd/convex.hpp"
#include "nafd/link_metrics.hpp"
#include "nafd/quant.hpp"

namespace nafd {

class ScaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Floor on compression-noise variances (mW) keeping every log finite.
inline constexpr double kSigmaFloor = 1e-12;

/// Everything that stays fixed across SCA iterations of one realization.
struct ScaContext {
  const SystemConfig& cfg;
  const BeamformerSet& beams;
  const ChannelSet& channels;
  QuantModel q;
  LinkModel model;

  ScaContext(const SystemConfig& c, const BeamformerSet& b, const ChannelSet& ch, QuantModel qm)
      : cfg(c), beams(b), channels(ch), q(qm), model(LinkModel::build(b, ch, c, qm)) {}
};

/// Expansion-point quantities of one SCA iteration.
struct ScaState {
  OptVars iterate;
  RVec x;                        // flat iterate
  std::vector<double> objective_trace;
  std::vector<CMat> a_t;         // [m] F_m diag(eta) F_m^H + sigma2_dl I
  std::vector<CMat> b_t;         // [z] uplink fronthaul covariance
  std::vector<double> phi_dl;    // [k] 1 / DL interference-plus-noise
  std::vector<double> phi_ul;    // [j] 1 / UL interference-plus-noise
  CMat cq_n;
  int n = 0;
};

ScaState make_state(const ScaContext& ctx, const OptVars& vars, int n = 0);

/// Per-constraint values of the original problem at vars.
struct ConstraintReport {
  std::vector<double> c_dl, c_ul, p_dl;
  double max_cdl_violation = 0.0;  // max(0, C_D,m - C_D)
  double max_cul_violation = 0.0;
  double max_pd_violation = 0.0;   // max(0, P_D,m - P_D)  (mW)
  double max_pu_violation = 0.0;
  bool strictly_feasible = false;
};

ConstraintReport check_constraints(const ScaContext& ctx, const OptVars& vars);

/// Uplink powers at half budget, compression variances at the noise power,
/// equal eta with the busiest T-RAU at 80% of its budget. Any fronthaul
/// constraint still violated is first relieved by raising that link's
/// compression variance (up to its power headroom), then eta and the uplink
/// powers are halved; at most 60 halvings.
OptVars init_vars(const ScaContext& ctx, int* shrink_steps = nullptr);

/// Tangent-plane upper bound of the downlink fronthaul log-det at A_t.
std::vector<AffineMinusLogConstraint> linearize_dl_fronthaul(const ScaContext& ctx,
                                                             const ScaState& state);

/// Same for the uplink fronthaul at B_t; P_D,m enters as its affine function.
std::vector<AffineMinusLogConstraint> linearize_ul_fronthaul(const ScaContext& ctx,
                                                             const ScaState& state);

/// h^(n)(x) = constant + coeff^T x (bps/Hz, weights included).
struct AffineFunctional {
  double constant = 0.0;
  std::vector<double> coeff;
  double operator()(const RVec& x) const;
};

/// h(x) = w_D sum_k log2 I_k(x) + w_U sum_j log2 I_j(x)
double concave_part(const ScaContext& ctx, const RVec& x);
/// f(x) = w_D sum_k log2(S_k + I_k) + w_U sum_j log2(S_j + I_j)
double convex_part_f(const ScaContext& ctx, const RVec& x);

AffineFunctional linearize_h(const ScaContext& ctx, const ScaState& state);

ConvexProblem build_subproblem(const ScaContext& ctx, const ScaState& state);

struct IterationRecord {
  int iter = 0;
  double surrogate_obj = 0.0;  // bps/Hz
  double true_obj = 0.0;       // bps/Hz
  double max_cdl_violation = 0.0;
  double max_cul_violation = 0.0;
  double max_pd_violation = 0.0;
  double max_pu_violation = 0.0;
  int newton_iters = 0;
  int backtracks = 0;
};

struct ScaOptions {
  double tol = 1e-3;
  int max_iter = 200;
  BarrierOptions barrier;

  static ScaOptions from(const SystemConfig& cfg) {
    ScaOptions o;
    o.tol = cfg.sca_tol;
    o.max_iter = cfg.sca_max_iter;
    return o;
  }
};

struct ScaResult {
  OptVars vars;
  RateReport report;
  std::vector<IterationRecord> trace;  // entry 0 is the initial point
  int iterations = 0;
  bool converged = false;
  int init_shrink_steps = 0;
};

using IterateObserver = std::function<void(const ScaState&, const IterationRecord&)>;

ScaResult run_sca(const SystemConfig& cfg, const BeamformerSet& beams,
                  const ChannelSet& channels, const QuantModel& q,
                  const ScaOptions& opt, const IterateObserver& observer = {});

inline ScaResult run_sca(const SystemConfig& cfg, const BeamformerSet& beams,
                         const ChannelSet& channels, const QuantModel& q) {
  return run_sca(cfg, beams, channels, q, ScaOptions::from(cfg));
}

/// iter,surrogate_obj_bpshz,true_obj_bpshz,max_cdl_violation,max_cul_violation,max_pd_violation
void write_trace_csv(std::ostream& os, const std::vector<IterationRecord>& trace);

}  // namespace nafd
