#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nafd/beamforming.hpp"
#include "nafd/channel.hpp"
#include "nafd/config.hpp"
#include "nafd/layout.hpp"
#include "nafd/sca.hpp"

namespace nafd {

class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Convergence, BitSweep, CdfCompare, LayoutDump };

struct CapacityPair {
  double c_dl = 0.0;
  double c_ul = 0.0;
  bool operator==(const CapacityPair&) const = default;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::BitSweep;
  int trials = 100;
  std::vector<int> bits_list;
  std::vector<CapacityPair> capacities;
  std::vector<DuplexMode> modes;
  std::filesystem::path out_path;
  int threads = 1;

  void validate() const;  // HarnessError
};

/// Trials allowed to fail (after redraws) before the whole run is rejected.
inline constexpr double kMaxFailureFraction = 0.05;
inline constexpr int kMaxRedraws = 5;

struct TrialRecord {
  int trial_id = 0;
  DuplexMode mode = DuplexMode::NAFD;
  int bits = 1;
  double c_dl = 0.0;
  double c_ul = 0.0;
  double objective_bpshz = 0.0;
  double sum_r_dl = 0.0;
  double sum_r_ul = 0.0;
  int sca_iters = 0;
  double wall_ms = 0.0;
  // bookkeeping beyond the CSV schema
  int redraws = 0;
  bool converged = false;
  bool monotone = true;           // true objective never dropped by more than 1e-6
  double max_cap_violation = 0.0;  // bps/Hz, over every iterate
  double max_power_violation = 0.0;  // mW, over every iterate
};

struct Realization {
  Layout layout;
  ChannelSet channels;
  BeamformerSet beams;
  int redraws = 0;
};

/// Geometry, channels and beams for one trial; a rank-deficient draw is
/// replaced by a fresh sub-stream, at most kMaxRedraws times.
Realization draw_realization(const SystemConfig& cfg, DuplexMode mode, std::uint64_t seed,
                             int trial_id);

struct OperatingPoint {
  int bits = 1;
  CapacityPair cap;
};

/// One realization, SCA at every operating point (common random numbers).
/// Throws on unrecoverable failure.
std::vector<TrialRecord> run_trial(const SystemConfig& cfg, DuplexMode mode, int trial_id,
                                   const std::vector<OperatingPoint>& points,
                                   std::vector<ScaResult>* sca_out = nullptr);

/// Trials [0, n) of every mode, in parallel. Failed trials are dropped and
/// counted; HarnessError if more than kMaxFailureFraction of a mode fails.
struct TrialBatch {
  std::vector<TrialRecord> records;  // sorted by (mode, trial_id, point)
  std::vector<int> failures_per_mode;
  std::vector<std::string> failure_messages;
};

TrialBatch run_trials(const SystemConfig& cfg, const std::vector<DuplexMode>& modes,
                      int n_trials, const std::vector<OperatingPoint>& points, int threads);

struct ConvergenceResult {
  ScaResult sca;
  Realization realization;
};
ConvergenceResult run_convergence(const SystemConfig& cfg, const ExperimentSpec& spec);

struct SweepRow {
  DuplexMode mode = DuplexMode::NAFD;
  int bits = 1;
  double mean = 0.0;
  double stderr_ = 0.0;
  int trials = 0;
};
struct SweepResult {
  std::vector<SweepRow> rows;
  TrialBatch batch;
};
SweepResult run_bit_sweep(const SystemConfig& cfg, const ExperimentSpec& spec);

struct CdfPoint {
  double value = 0.0;
  double prob = 0.0;
};
/// Sorted values with plotting positions rank/(n+1).
std::vector<CdfPoint> empirical_cdf(std::vector<double> samples);

struct CdfSeries {
  int bits = 1;
  CapacityPair cap;
  std::vector<CdfPoint> cdf;
  std::vector<double> samples;  // trial order
};
struct CdfResult {
  std::vector<CdfSeries> series;
  TrialBatch batch;
};
CdfResult run_cdf_compare(const SystemConfig& cfg, const ExperimentSpec& spec);

void write_trial_csv(std::ostream& os, const std::vector<TrialRecord>& records);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
void write_cdf_csv(std::ostream& os, const std::vector<CdfSeries>& series);

/// Writes to spec.out_path (and siblings) according to spec.kind.
std::string run_experiment(const SystemConfig& cfg, const ExperimentSpec& spec);

std::filesystem::path sibling_path(const std::filesystem::path& p, const std::string& suffix);

}  // namespace nafd
