#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "csfusion/config_io.hpp"
#include "csfusion/pipeline.hpp"

namespace csfusion {

/// Resolves the fault to inject: a clean run when `with_fault` is false, the
/// configured fault otherwise, defaulting to the standard 10% thrust
/// execution deficit from 7 km when the config carries none.
FaultConfig effective_fault(const FaultConfig& configured, bool with_fault);

/// Simulates one seeded descent and streams it through the monitor.
RiskReport simulate_and_monitor(const RunConfig& cfg, std::uint64_t seed,
                                bool with_fault);

struct RunOutcome {
  std::uint64_t seed = 0;
  std::optional<double> costate_alarm_t;
  std::optional<double> ekf_alarm_t;
  double peak_hazard_prob = 0.0;
  std::int64_t windows_observed = 0;
  std::int64_t costate_windows_exceeding = 0;
  std::int64_t ekf_windows_exceeding = 0;
  /// The geometric detector fired and did so before the statistical one (or
  /// the statistical one stayed silent).
  bool costate_first = false;
};

struct CompareResult {
  std::vector<RunOutcome> fault_runs;
  std::vector<RunOutcome> nominal_runs;
  int costate_first_count = 0;
  int fault_costate_alarms = 0;
  int fault_ekf_alarms = 0;
  int nominal_costate_alarms = 0;
  int nominal_ekf_alarms = 0;
  double nominal_costate_fa_rate = 0.0;  // fraction of exceeding windows
  double nominal_ekf_fa_rate = 0.0;
  double nominal_peak_hazard_prob = 0.0;
};

/// Seeded early-warning experiment: `fault_runs` descents with the configured
/// fault and `nominal_runs` clean descents, all through identical detector
/// settings. Runs execute in parallel when `threads` > 1; aggregation order
/// is fixed by seed.
CompareResult run_compare_experiment(const RunConfig& cfg, int fault_runs,
                                     int nominal_runs, std::uint64_t base_seed,
                                     int threads = 0);

}  // namespace csfusion
