#include "nafd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "nafd/csv.hpp"
#include "nafd/quant.hpp"
#include "nafd/rng.hpp"

namespace nafd {

void ExperimentSpec::validate() const {
  if (trials < 1) throw HarnessError("trials must be >= 1");
  for (int b : bits_list)
    if (b < 1 || b > 16) throw HarnessError("bits must lie in 1..16, got " + std::to_string(b));
  for (const auto& c : capacities)
    if (!(c.c_dl > 0.0) || !(c.c_ul > 0.0)) throw HarnessError("capacities must be positive");
  if (threads < 1) throw HarnessError("threads must be >= 1");
}

std::filesystem::path sibling_path(const std::filesystem::path& p, const std::string& suffix) {
  std::filesystem::path out = p;
  out.replace_filename(p.stem().string() + suffix + p.extension().string());
  return out;
}

namespace {

Realization draw_attempt(const SystemConfig& cfg, DuplexMode mode, std::uint64_t seed,
                         int trial_id, int attempt) {
  Rng rng = trial_rng(seed, static_cast<std::uint64_t>(trial_id),
                      static_cast<std::uint64_t>(attempt));
  Realization r;
  r.layout = generate_layout(cfg, mode, rng);
  r.channels = draw_channels(r.layout, cfg, rng);
  r.beams = build_beamformers(r.channels, cfg);
  r.redraws = attempt;
  return r;
}

TrialRecord run_point(const SystemConfig& base, const Realization& rz, DuplexMode mode,
                      int trial_id, const OperatingPoint& pt, ScaResult* keep) {
  SystemConfig cfg = base;
  cfg.dac_bits = pt.bits;
  cfg.c_dl_bpshz = pt.cap.c_dl;
  cfg.c_ul_bpshz = pt.cap.c_ul;

  TrialRecord rec;
  rec.trial_id = trial_id;
  rec.mode = mode;
  rec.bits = pt.bits;
  rec.c_dl = pt.cap.c_dl;
  rec.c_ul = pt.cap.c_ul;
  rec.redraws = rz.redraws;

  double last_true = -std::numeric_limits<double>::infinity();
  auto watch = [&](const ScaState&, const IterationRecord& it) {
    rec.max_cap_violation =
        std::max({rec.max_cap_violation, it.max_cdl_violation, it.max_cul_violation});
    rec.max_power_violation =
        std::max({rec.max_power_violation, it.max_pd_violation, it.max_pu_violation});
    if (it.true_obj < last_true - 1e-6) rec.monotone = false;
    last_true = std::max(last_true, it.true_obj);
  };

  const auto t0 = std::chrono::steady_clock::now();
  ScaResult res = run_sca(cfg, rz.beams, rz.channels, QuantModel::for_bits(pt.bits),
                          ScaOptions::from(cfg), watch);
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
  rec.sum_r_dl = res.report.sum_dl();
  rec.sum_r_ul = res.report.sum_ul();
  rec.objective_bpshz = res.report.objective;
  rec.sca_iters = res.iterations;
  rec.converged = res.converged;
  if (keep) *keep = std::move(res);
  return rec;
}

}  // namespace

Realization draw_realization(const SystemConfig& cfg, DuplexMode mode, std::uint64_t seed,
                             int trial_id) {
  std::string last;
  for (int a = 0; a <= kMaxRedraws; ++a) {
    try {
      return draw_attempt(cfg, mode, seed, trial_id, a);
    } catch (const DegenerateChannelError& e) {
      last = e.what();
    } catch (const GeometryError& e) {
      last = e.what();
    }
  }
  throw HarnessError("trial " + std::to_string(trial_id) + ": no usable realization after " +
                     std::to_string(kMaxRedraws) + " redraws: " + last);
}

std::vector<TrialRecord> run_trial(const SystemConfig& cfg, DuplexMode mode, int trial_id,
                                   const std::vector<OperatingPoint>& points,
                                   std::vector<ScaResult>* sca_out) {
  std::string last;
  for (int a = 0; a <= kMaxRedraws; ++a) {
    try {
      const Realization rz = draw_attempt(cfg, mode, cfg.seed, trial_id, a);
      std::vector<TrialRecord> out;
      std::vector<ScaResult> kept;
      for (const auto& pt : points) {
        ScaResult r;
        out.push_back(run_point(cfg, rz, mode, trial_id, pt, sca_out ? &r : nullptr));
        if (sca_out) kept.push_back(std::move(r));
      }
      if (sca_out) *sca_out = std::move(kept);
      return out;
    } catch (const DegenerateChannelError& e) {
      last = e.what();
    } catch (const GeometryError& e) {
      last = e.what();
    } catch (const ScaError& e) {
      last = e.what();
    } catch (const MetricError& e) {
      last = e.what();
    }
  }
  throw HarnessError("trial " + std::to_string(trial_id) + " failed after " +
                     std::to_string(kMaxRedraws) + " redraws: " + last);
}

TrialBatch run_trials(const SystemConfig& cfg, const std::vector<DuplexMode>& modes,
                      int n_trials, const std::vector<OperatingPoint>& points, int threads) {
  const std::size_t n_jobs = modes.size() * static_cast<std::size_t>(n_trials);
  std::vector<std::optional<std::vector<TrialRecord>>> slots(n_jobs);
  std::vector<std::string> errors(n_jobs);
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (std::size_t i = next++; i < n_jobs; i = next++) {
      const DuplexMode mode = modes[i / n_trials];
      const int trial = static_cast<int>(i % n_trials);
      try {
        slots[i] = run_trial(cfg, mode, trial, points);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(n_jobs)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  TrialBatch b;
  b.failures_per_mode.assign(modes.size(), 0);
  for (std::size_t i = 0; i < n_jobs; ++i) {
    if (slots[i]) {
      for (auto& r : *slots[i]) b.records.push_back(r);
    } else {
      ++b.failures_per_mode[i / n_trials];
      b.failure_messages.push_back(std::string(mode_name(modes[i / n_trials])) + ": " + errors[i]);
    }
  }
  for (std::size_t m = 0; m < modes.size(); ++m) {
    if (b.failures_per_mode[m] > kMaxFailureFraction * n_trials)
      throw HarnessError(std::to_string(b.failures_per_mode[m]) + " of " +
                         std::to_string(n_trials) + " " + std::string(mode_name(modes[m])) +
                         " trials failed; first: " + b.failure_messages.front());
  }
  return b;
}

ConvergenceResult run_convergence(const SystemConfig& cfg, const ExperimentSpec& spec) {
  spec.validate();
  const DuplexMode mode = spec.modes.empty() ? DuplexMode::NAFD : spec.modes.front();
  SystemConfig c = cfg;
  if (!spec.bits_list.empty()) c.dac_bits = spec.bits_list.front();
  if (!spec.capacities.empty()) {
    c.c_dl_bpshz = spec.capacities.front().c_dl;
    c.c_ul_bpshz = spec.capacities.front().c_ul;
  }
  ConvergenceResult out;
  out.realization = draw_realization(c, mode, c.seed, 0);
  const Realization& rz = out.realization;
  out.sca = run_sca(c, rz.beams, rz.channels, QuantModel::for_bits(c.dac_bits));
  return out;
}

namespace {

std::vector<OperatingPoint> grid_points(const std::vector<int>& bits,
                                        const std::vector<CapacityPair>& caps) {
  std::vector<OperatingPoint> pts;
  for (const auto& c : caps)
    for (int b : bits) pts.push_back({b, c});
  return pts;
}

}  // namespace

SweepResult run_bit_sweep(const SystemConfig& cfg, const ExperimentSpec& spec) {
  spec.validate();
  std::vector<int> bits = spec.bits_list;
  if (bits.empty()) bits = {1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<DuplexMode> modes = spec.modes;
  if (modes.empty()) modes = {DuplexMode::NAFD, DuplexMode::CCFD};
  const CapacityPair cap = spec.capacities.empty()
                               ? CapacityPair{cfg.c_dl_bpshz, cfg.c_ul_bpshz}
                               : spec.capacities.front();

  SweepResult res;
  res.batch = run_trials(cfg, modes, spec.trials, grid_points(bits, {cap}), spec.threads);
  for (DuplexMode mode : modes) {
    for (int b : bits) {
      std::vector<double> v;
      for (const auto& r : res.batch.records)
        if (r.mode == mode && r.bits == b) v.push_back(r.objective_bpshz);
      SweepRow row;
      row.mode = mode;
      row.bits = b;
      row.trials = static_cast<int>(v.size());
      if (!v.empty()) {
        row.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        double ss = 0.0;
        for (double x : v) ss += (x - row.mean) * (x - row.mean);
        row.stderr_ = v.size() > 1 ? std::sqrt(ss / (v.size() - 1) / v.size()) : 0.0;
      }
      res.rows.push_back(row);
    }
  }
  return res;
}

std::vector<CdfPoint> empirical_cdf(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const double n1 = static_cast<double>(samples.size()) + 1.0;
  std::vector<CdfPoint> cdf;
  cdf.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) cdf.push_back({samples[i], (i + 1) / n1});
  return cdf;
}

CdfResult run_cdf_compare(const SystemConfig& cfg, const ExperimentSpec& spec) {
  spec.validate();
  std::vector<int> bits = spec.bits_list;
  if (bits.empty()) bits = {1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<CapacityPair> caps = spec.capacities;
  if (caps.empty()) caps = {{50.0, 50.0}, {130.0, 130.0}};
  const DuplexMode mode = spec.modes.empty() ? DuplexMode::NAFD : spec.modes.front();

  CdfResult res;
  res.batch = run_trials(cfg, {mode}, spec.trials, grid_points(bits, caps), spec.threads);
  for (const auto& c : caps) {
    for (int b : bits) {
      CdfSeries s;
      s.bits = b;
      s.cap = c;
      for (const auto& r : res.batch.records)
        if (r.bits == b && r.c_dl == c.c_dl && r.c_ul == c.c_ul)
          s.samples.push_back(r.objective_bpshz);
      s.cdf = empirical_cdf(s.samples);
      res.series.push_back(std::move(s));
    }
  }
  return res;
}

void write_trial_csv(std::ostream& os, const std::vector<TrialRecord>& records) {
  // wall_ms is left out so identical runs give identical files
  CsvWriter w(os);
  w.row("trial_id", "mode", "bits", "c_dl", "c_ul", "objective_bpshz", "sum_r_dl", "sum_r_ul",
        "sca_iters");
  for (const auto& r : records)
    w.row(r.trial_id, mode_name(r.mode), r.bits, r.c_dl, r.c_ul, r.objective_bpshz, r.sum_r_dl,
          r.sum_r_ul, r.sca_iters);
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  CsvWriter w(os);
  w.row("mode", "bits", "mean_bpshz", "stderr", "trials");
  for (const auto& r : rows) w.row(mode_name(r.mode), r.bits, r.mean, r.stderr_, r.trials);
}

void write_cdf_csv(std::ostream& os, const std::vector<CdfSeries>& series) {
  CsvWriter w(os);
  w.row("bits", "c_dl", "c_ul", "rank", "objective_bpshz", "cdf");
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.cdf.size(); ++i)
      w.row(s.bits, s.cap.c_dl, s.cap.c_ul, i + 1, s.cdf[i].value, s.cdf[i].prob);
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw HarnessError("cannot open " + p.string() + " for writing");
  return os;
}

std::string fmt(double v) { return CsvWriter::format(v); }

}  // namespace

std::string run_experiment(const SystemConfig& cfg, const ExperimentSpec& spec) {
  spec.validate();
  std::ostringstream msg;
  switch (spec.kind) {
    case ExperimentKind::Convergence: {
      const auto r = run_convergence(cfg, spec);
      auto os = open_out(spec.out_path);
      write_trace_csv(os, r.sca.trace);
      msg << "convergence: final objective " << fmt(r.sca.report.objective) << " bps/Hz after "
          << r.sca.iterations << " iterations" << (r.sca.converged ? "" : " (not converged)");
      break;
    }
    case ExperimentKind::BitSweep: {
      const auto r = run_bit_sweep(cfg, spec);
      {
        auto os = open_out(spec.out_path);
        write_sweep_csv(os, r.rows);
      }
      auto os = open_out(sibling_path(spec.out_path, "_trials"));
      write_trial_csv(os, r.batch.records);
      int failed = 0;
      for (int f : r.batch.failures_per_mode) failed += f;
      msg << "sweep-bits: " << r.rows.size() << " points, " << failed << " failed trials";
      break;
    }
    case ExperimentKind::CdfCompare: {
      const auto r = run_cdf_compare(cfg, spec);
      {
        auto os = open_out(spec.out_path);
        write_trial_csv(os, r.batch.records);
      }
      auto os = open_out(sibling_path(spec.out_path, "_cdf"));
      write_cdf_csv(os, r.series);
      int failed = 0;
      for (int f : r.batch.failures_per_mode) failed += f;
      msg << "cdf: " << r.series.size() << " series, " << failed << " failed trials";
      break;
    }
    case ExperimentKind::LayoutDump: {
      const DuplexMode mode = spec.modes.empty() ? DuplexMode::NAFD : spec.modes.front();
      Rng rng = trial_rng(cfg.seed, 0);
      const Layout lay = generate_layout(cfg, mode, rng);
      auto os = open_out(spec.out_path);
      write_layout_csv(os, lay);
      msg << "layout: " << lay.trau_xy.size() << " T-RAUs, " << lay.rrau_xy.size()
          << " R-RAUs, " << lay.dl_user_xy.size() + lay.ul_user_xy.size() << " users";
      break;
    }
  }
  return msg.str();
}

}  // namespace nafd
