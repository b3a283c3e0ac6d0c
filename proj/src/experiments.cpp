#include "csfusion/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "csfusion/descent_sim.hpp"

namespace csfusion {

FaultConfig effective_fault(const FaultConfig& configured, bool with_fault) {
  FaultConfig fault = configured;
  if (!with_fault) {
    fault.kind = FaultConfig::Kind::kNone;
  } else if (fault.kind == FaultConfig::Kind::kNone) {
    // Standard injected fault: a 10% thrust execution deficit from 7 km.
    fault.kind = FaultConfig::Kind::kThrustMapScale;
    fault.magnitude = 0.9;
    fault.onset_altitude = 7000.0;
    fault.onset_time = -1.0;
  }
  return fault;
}

RiskReport simulate_and_monitor(const RunConfig& cfg, std::uint64_t seed,
                                bool with_fault) {
  DescentConfig descent = cfg.descent;
  descent.seed = seed;
  const DescentResult sim =
      simulate_descent(descent, effective_fault(cfg.fault, with_fault));
  return run_pipeline(sim.samples, cfg.pipeline, descent.initial, sim.touchdown_t);
}

namespace {

RunOutcome outcome_of(const RiskReport& report, std::uint64_t seed) {
  RunOutcome out;
  out.seed = seed;
  out.costate_alarm_t = report.summary.first_costate_alarm_t;
  out.ekf_alarm_t = report.summary.first_ekf_alarm_t;
  out.peak_hazard_prob = report.summary.peak_hazard_prob;
  out.windows_observed = report.summary.windows_observed;
  out.costate_windows_exceeding = report.summary.costate_windows_exceeding;
  out.ekf_windows_exceeding = report.summary.ekf_windows_exceeding;
  out.costate_first =
      out.costate_alarm_t.has_value() &&
      (!out.ekf_alarm_t.has_value() || *out.costate_alarm_t < *out.ekf_alarm_t);
  return out;
}

void run_batch(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
               bool with_fault, std::vector<RunOutcome>& out, int threads) {
  out.resize(seeds.size());
  if (threads < 1)
    threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min<int>(threads, static_cast<int>(seeds.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i)
      out[i] = outcome_of(simulate_and_monitor(cfg, seeds[i], with_fault), seeds[i]);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= seeds.size()) break;
      out[i] = outcome_of(simulate_and_monitor(cfg, seeds[i], with_fault), seeds[i]);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace

CompareResult run_compare_experiment(const RunConfig& cfg, int fault_runs,
                                     int nominal_runs, std::uint64_t base_seed,
                                     int threads) {
  std::vector<std::uint64_t> fault_seeds, nominal_seeds;
  for (int i = 0; i < fault_runs; ++i) fault_seeds.push_back(base_seed + static_cast<std::uint64_t>(i));
  for (int i = 0; i < nominal_runs; ++i)
    nominal_seeds.push_back(base_seed + 1000003ull + static_cast<std::uint64_t>(i));

  CompareResult result;
  run_batch(cfg, fault_seeds, true, result.fault_runs, threads);
  run_batch(cfg, nominal_seeds, false, result.nominal_runs, threads);

  for (const auto& r : result.fault_runs) {
    if (r.costate_first) ++result.costate_first_count;
    if (r.costate_alarm_t) ++result.fault_costate_alarms;
    if (r.ekf_alarm_t) ++result.fault_ekf_alarms;
  }
  std::int64_t windows = 0, costate_exceed = 0, ekf_exceed = 0;
  for (const auto& r : result.nominal_runs) {
    if (r.costate_alarm_t) ++result.nominal_costate_alarms;
    if (r.ekf_alarm_t) ++result.nominal_ekf_alarms;
    windows += r.windows_observed;
    costate_exceed += r.costate_windows_exceeding;
    ekf_exceed += r.ekf_windows_exceeding;
    result.nominal_peak_hazard_prob =
        std::max(result.nominal_peak_hazard_prob, r.peak_hazard_prob);
  }
  if (windows > 0) {
    result.nominal_costate_fa_rate =
        static_cast<double>(costate_exceed) / static_cast<double>(windows);
    result.nominal_ekf_fa_rate =
        static_cast<double>(ekf_exceed) / static_cast<double>(windows);
  }
  return result;
}

}  // namespace csfusion
