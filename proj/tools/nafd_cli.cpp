// nafd: Monte-Carlo driver for the cell-free full-duplex optimizer.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nafd/config.hpp"
#include "nafd/csv.hpp"
#include "nafd/harness.hpp"
#include "nafd/kernels/kernels.hpp"

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<int> parse_bits(const std::string& s) {
  std::vector<int> out;
  for (const auto& t : split(s)) {
    const auto dash = t.find('-');
    try {
      if (dash != std::string::npos && dash > 0) {
        const int a = std::stoi(t.substr(0, dash)), b = std::stoi(t.substr(dash + 1));
        for (int i = a; i <= b; ++i) out.push_back(i);
      } else {
        out.push_back(std::stoi(t));
      }
    } catch (const std::exception&) {
      throw UsageError("bad --bits entry '" + t + "'");
    }
  }
  return out;
}

// "26" -> (26,26); "50:40" -> C_D=50, C_U=40
std::vector<nafd::CapacityPair> parse_caps(const std::string& s) {
  std::vector<nafd::CapacityPair> out;
  for (const auto& t : split(s)) {
    try {
      const auto colon = t.find(':');
      if (colon == std::string::npos) {
        const double c = std::stod(t);
        out.push_back({c, c});
      } else {
        out.push_back({std::stod(t.substr(0, colon)), std::stod(t.substr(colon + 1))});
      }
    } catch (const std::exception&) {
      throw UsageError("bad --cap entry '" + t + "'");
    }
  }
  return out;
}

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int trials = 0;
  std::string out;
  std::string mode;
  std::string bits;
  std::string cap;
  int threads = 1;
  std::string kernels;
};

void add_common(CLI::App* sub, Common& c, const std::string& default_out) {
  c.out = default_out;
  sub->add_option("--config", c.config, "JSON config file (missing keys take defaults)");
  sub->add_option_function<std::uint64_t>(
      "--seed", [&c](std::uint64_t v) { c.seed = v; c.seed_set = true; }, "master seed");
  sub->add_option("--trials", c.trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
  sub->add_option("--out", c.out, "output CSV path");
  sub->add_option("--mode", c.mode, "nafd or ccfd")
      ->check(CLI::IsMember({"nafd", "ccfd", "NAFD", "CCFD"}));
  sub->add_option("--bits", c.bits, "DAC bits, e.g. 1,2,8 or 1-8");
  sub->add_option("--cap", c.cap, "fronthaul capacities, e.g. 50,130 or 26:20");
  sub->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--kernels", c.kernels, "scalar or avx2 (default: best available)")
      ->check(CLI::IsMember({"scalar", "avx2"}));
}

nafd::SystemConfig resolve_config(const Common& c) {
  nafd::SystemConfig cfg;
  if (!c.config.empty()) {
    if (!std::filesystem::exists(c.config))
      throw UsageError("config file not found: " + c.config);
    cfg = nafd::load_config(c.config);
  }
  if (c.seed_set) cfg.seed = c.seed;
  cfg.validate();
  return cfg;
}

nafd::ExperimentSpec resolve_spec(const Common& c, nafd::ExperimentKind kind, int default_trials) {
  nafd::ExperimentSpec s;
  s.kind = kind;
  s.trials = c.trials > 0 ? c.trials : default_trials;
  s.bits_list = parse_bits(c.bits);
  s.capacities = parse_caps(c.cap);
  if (!c.mode.empty()) s.modes = {nafd::parse_mode(c.mode)};
  s.out_path = c.out;
  s.threads = c.threads;
  try {
    s.validate();
  } catch (const nafd::HarnessError& e) {
    throw UsageError(e.what());
  }
  return s;
}

void apply_kernels(const Common& c) {
  if (c.kernels.empty()) return;
  const auto b = c.kernels == "scalar" ? nafd::kernels::Backend::Scalar
                                       : nafd::kernels::Backend::Avx2;
  if (!nafd::kernels::set_backend(b))
    throw UsageError("kernel backend '" + c.kernels + "' is not available on this CPU");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cell-free network-assisted full-duplex sum-rate optimizer"};
  app.require_subcommand(1);

  Common run_c, conv_c, sweep_c, cdf_c, lay_c;
  auto* run = app.add_subcommand("run", "optimize the configured operating point over trials");
  add_common(run, run_c, "run.csv");
  auto* conv = app.add_subcommand("convergence", "per-iteration trace of one realization");
  add_common(conv, conv_c, "convergence.csv");
  auto* sweep = app.add_subcommand("sweep-bits", "mean sum rate versus DAC resolution");
  add_common(sweep, sweep_c, "sweep_bits.csv");
  auto* cdf = app.add_subcommand("cdf", "per-trial sum rates and empirical CDFs");
  add_common(cdf, cdf_c, "cdf.csv");
  auto* lay = app.add_subcommand("layout", "dump one RAU/user placement");
  add_common(lay, lay_c, "layout.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints usage to stderr
    return 1;
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    std::string summary;
    if (run->parsed()) {
      apply_kernels(run_c);
      auto cfg = resolve_config(run_c);
      auto spec = resolve_spec(run_c, nafd::ExperimentKind::BitSweep, 1);
      const int bits = spec.bits_list.empty() ? cfg.dac_bits : spec.bits_list.front();
      const nafd::CapacityPair cap = spec.capacities.empty()
                                         ? nafd::CapacityPair{cfg.c_dl_bpshz, cfg.c_ul_bpshz}
                                         : spec.capacities.front();
      const auto modes = spec.modes.empty() ? std::vector{nafd::DuplexMode::NAFD} : spec.modes;
      const auto batch = nafd::run_trials(cfg, modes, spec.trials, {{bits, cap}}, spec.threads);
      std::ofstream os(spec.out_path, std::ios::binary);
      if (!os) throw std::runtime_error("cannot open " + spec.out_path.string());
      nafd::write_trial_csv(os, batch.records);
      double mean = 0.0;
      for (const auto& r : batch.records) mean += r.objective_bpshz;
      if (!batch.records.empty()) mean /= batch.records.size();
      summary = "run: " + std::to_string(batch.records.size()) + " trials, mean objective " +
                nafd::CsvWriter::format(mean) + " bps/Hz";
    } else {
      Common* c = nullptr;
      nafd::ExperimentKind kind{};
      int default_trials = 1;
      if (conv->parsed()) { c = &conv_c; kind = nafd::ExperimentKind::Convergence; }
      if (sweep->parsed()) { c = &sweep_c; kind = nafd::ExperimentKind::BitSweep; default_trials = 100; }
      if (cdf->parsed()) { c = &cdf_c; kind = nafd::ExperimentKind::CdfCompare; default_trials = 200; }
      if (lay->parsed()) { c = &lay_c; kind = nafd::ExperimentKind::LayoutDump; }
      apply_kernels(*c);
      auto cfg = resolve_config(*c);
      auto spec = resolve_spec(*c, kind, default_trials);
      if (kind == nafd::ExperimentKind::BitSweep && spec.capacities.empty())
        spec.capacities = {{130.0, 130.0}};
      summary = nafd::run_experiment(cfg, spec);
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s (%.1f s)\n", summary.c_str(), secs);
    return 0;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const nafd::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
