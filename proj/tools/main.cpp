// Command-line front end: synthetic descent generation, the fusion monitor,
// the baseline filter, detector comparison experiments, generator
// calibration diagnostics and a small risk-aware control demo.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "csfusion/config_io.hpp"
#include "csfusion/ctmc.hpp"
#include "csfusion/errors.hpp"
#include "csfusion/experiments.hpp"
#include "csfusion/io.hpp"
#include "csfusion/mpc.hpp"
#include "csfusion/stats.hpp"

namespace fs = std::filesystem;
using namespace csfusion;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string input_path;
  bool emit_truth = false;
};

RunConfig load_config(const CommonArgs& args) {
  RunConfig cfg;
  if (!args.config_path.empty()) cfg = load_run_config(args.config_path);
  if (args.seed) cfg.descent.seed = *args.seed;
  return cfg;
}

fs::path ensure_out_dir(const CommonArgs& args) {
  fs::path dir(args.out_dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<TelemetrySample> obtain_telemetry(const CommonArgs& args,
                                              const RunConfig& cfg,
                                              double* touchdown_t) {
  if (!args.input_path.empty()) {
    auto samples = ingest_csv(args.input_path);
    if (touchdown_t)
      *touchdown_t = samples.empty() ? 0.0 : samples.back().t;
    return samples;
  }
  const DescentResult sim = simulate_descent(cfg.descent, cfg.fault);
  if (touchdown_t) *touchdown_t = sim.touchdown_t;
  return sim.samples;
}

int cmd_simulate(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  const DescentResult sim = simulate_descent(cfg.descent, cfg.fault);
  const fs::path dir = ensure_out_dir(args);
  write_telemetry_csv((dir / "telemetry.csv").string(), sim.samples, args.emit_truth);
  std::cout << "wrote " << sim.samples.size() << " samples to "
            << (dir / "telemetry.csv").string() << " (touchdown at "
            << format_double(sim.touchdown_t) << " s)\n";
  return 0;
}

int cmd_run(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  double touchdown = 0.0;
  const auto samples = obtain_telemetry(args, cfg, &touchdown);
  const RiskReport report =
      run_pipeline(samples, cfg.pipeline, cfg.descent.initial, touchdown);
  const fs::path dir = ensure_out_dir(args);
  write_signals_csv((dir / "signals.csv").string(), report);
  write_summary_json((dir / "summary.json").string(), report,
                     run_config_to_json(cfg));
  std::cout << "signals: " << (dir / "signals.csv").string() << "\n"
            << "summary: " << (dir / "summary.json").string() << "\n";
  if (report.summary.first_costate_alarm_t)
    std::cout << "co-state alarm at "
              << format_double(*report.summary.first_costate_alarm_t) << " s\n";
  if (report.summary.first_ekf_alarm_t)
    std::cout << "EKF alarm at "
              << format_double(*report.summary.first_ekf_alarm_t) << " s\n";
  return 0;
}

int cmd_ekf(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  double touchdown = 0.0;
  const auto samples = obtain_telemetry(args, cfg, &touchdown);

  EkfState state;
  state.x = cfg.descent.initial.vec();
  Mat6 p0 = Mat6::Zero();
  p0.topLeftCorner<3, 3>() = cfg.pipeline.ekf.p0_pos * Mat3::Identity();
  p0.bottomRightCorner<3, 3>() = cfg.pipeline.ekf.p0_vel * Mat3::Identity();
  state.p = p0;
  const Mat3 r = cfg.pipeline.ekf.meas_noise_std
                     .cwiseProduct(cfg.pipeline.ekf.meas_noise_std)
                     .asDiagonal();
  WindowedAlarm alarm(cfg.pipeline.alarm.window, cfg.pipeline.alarm.consecutive);
  alarm.set_threshold(chi2_3_quantile(cfg.pipeline.alarm.ekf_level));

  const fs::path dir = ensure_out_dir(args);
  std::ofstream out(dir / "ekf_signals.csv");
  out << "t,nu_alt,nu_range,nu_vz,nis,alarm\n";
  double prev_t = 0.0;
  bool first = true;
  for (const auto& s : samples) {
    if (!s.y.finite()) continue;
    if (first) {
      prev_t = s.t;
      first = false;
      continue;
    }
    const double dt = s.t - prev_t;
    if (!(dt > 0.0)) continue;
    prev_t = s.t;
    state = ekf_predict(state, dt, ekf_process_noise(dt, cfg.pipeline.ekf.accel_psd));
    const EkfUpdateResult upd = ekf_update(state, s.y, r);
    state = upd.state;
    alarm.observe(upd.nis, s.t);
    out << format_double(s.t) << ',' << format_double(upd.innovation[0]) << ','
        << format_double(upd.innovation[1]) << ','
        << format_double(upd.innovation[2]) << ',' << format_double(upd.nis)
        << ',' << (alarm.alarmed() ? 1 : 0) << "\n";
  }
  std::cout << "wrote " << (dir / "ekf_signals.csv").string() << "\n";
  return 0;
}

int cmd_compare(const CommonArgs& args, int fault_runs, int nominal_runs,
                int threads) {
  const RunConfig cfg = load_config(args);
  const std::uint64_t base_seed = args.seed.value_or(1);
  const CompareResult res =
      run_compare_experiment(cfg, fault_runs, nominal_runs, base_seed, threads);

  nlohmann::ordered_json j;
  j["fault_runs"] = fault_runs;
  j["nominal_runs"] = nominal_runs;
  j["base_seed"] = base_seed;
  j["costate_first_count"] = res.costate_first_count;
  j["fault_costate_alarms"] = res.fault_costate_alarms;
  j["fault_ekf_alarms"] = res.fault_ekf_alarms;
  j["nominal_costate_alarms"] = res.nominal_costate_alarms;
  j["nominal_ekf_alarms"] = res.nominal_ekf_alarms;
  j["nominal_costate_fa_rate"] = res.nominal_costate_fa_rate;
  j["nominal_ekf_fa_rate"] = res.nominal_ekf_fa_rate;
  j["nominal_peak_hazard_prob"] = res.nominal_peak_hazard_prob;
  auto runs = nlohmann::ordered_json::array();
  for (const auto& r : res.fault_runs) {
    nlohmann::ordered_json e;
    e["seed"] = r.seed;
    e["costate_alarm_t"] = r.costate_alarm_t
                               ? nlohmann::ordered_json(*r.costate_alarm_t)
                               : nlohmann::ordered_json(nullptr);
    e["ekf_alarm_t"] = r.ekf_alarm_t ? nlohmann::ordered_json(*r.ekf_alarm_t)
                                     : nlohmann::ordered_json(nullptr);
    e["peak_hazard_prob"] = r.peak_hazard_prob;
    e["costate_first"] = r.costate_first;
    runs.push_back(e);
  }
  j["runs"] = runs;

  const fs::path dir = ensure_out_dir(args);
  std::ofstream out(dir / "compare.json");
  out << j.dump(2) << "\n";

  std::cout << "co-state alarm first in " << res.costate_first_count << "/"
            << fault_runs << " fault runs (co-state fired in "
            << res.fault_costate_alarms << ", EKF fired in "
            << res.fault_ekf_alarms << ")\n"
            << "nominal alarms: co-state " << res.nominal_costate_alarms
            << ", EKF " << res.nominal_ekf_alarms << "; window exceedance rates "
            << format_double(res.nominal_costate_fa_rate) << " / "
            << format_double(res.nominal_ekf_fa_rate) << "\n";
  return 0;
}

int cmd_calibrate(const CommonArgs& args, int bootstrap_b) {
  const RunConfig cfg = load_config(args);
  double touchdown = 0.0;
  const auto samples = obtain_telemetry(args, cfg, &touchdown);
  const RiskReport report =
      run_pipeline(samples, cfg.pipeline, cfg.descent.initial, touchdown);
  if (report.modes.k == 0)
    throw WarmupIncompleteError("monitor never completed clustering warm-up");

  LabeledTrajectory traj;
  traj.k = report.modes.k;
  for (const auto& row : report.rows) {
    if (row.mode < 0) continue;
    LabeledSample s;
    s.t = row.t;
    s.x = Eigen::VectorXd(5);
    s.x << row.lambda, row.lambda_norm, row.z;
    s.mode = row.mode;
    traj.samples.push_back(std::move(s));
  }

  const TransitionStats stats = collect_transitions(traj);
  const Eigen::MatrixXd l_mle = mle_generator(stats.n_jumps, stats.dwell);
  const std::vector<int> hazard = report.modes.hazard_modes();
  const BootstrapResult ci =
      bootstrap_ci(traj, hazard, bootstrap_b, 0.95, cfg.descent.seed + 17);
  const SpectralReport spectral = spectral_stability(report.generator);

  nlohmann::ordered_json j;
  auto matrix_json = [](const Eigen::MatrixXd& m) {
    auto rows = nlohmann::ordered_json::array();
    for (long r = 0; r < m.rows(); ++r) {
      auto row = nlohmann::ordered_json::array();
      for (long c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  j["generator_moment"] = matrix_json(report.generator);
  j["generator_mle"] = matrix_json(l_mle);
  j["bootstrap_lo"] = matrix_json(ci.lo);
  j["bootstrap_hi"] = matrix_json(ci.hi);
  j["bootstrap_resamples_used"] = ci.resamples_used;
  j["spectral_real_parts"] = std::vector<double>(
      spectral.real_parts.data(),
      spectral.real_parts.data() + spectral.real_parts.size());
  j["spectral_valid"] = spectral.valid;
  j["calibration_trace"] = report.calibration_trace;
  j["mean_calibration_error"] = report.summary.mean_calibration_error;
  j["mode_model"] = mode_model_to_json(report.modes);

  const fs::path dir = ensure_out_dir(args);
  std::ofstream out(dir / "calibration.json");
  out << j.dump(2) << "\n";
  std::cout << "wrote " << (dir / "calibration.json").string() << "\n";
  return 0;
}

int cmd_mpc_demo(const CommonArgs& args, int cycles) {
  const RunConfig cfg = load_config(args);
  MpcConfig mpc_cfg = cfg.mpc;

  // Small three-mode scenario: slow drift toward a hazard mode, one risk-aware
  // controller tracking a soft descent target.
  Eigen::MatrixXd l(3, 3);
  l << -0.05, 0.20, 0.00,   //
      0.05, -0.22, 0.10,    //
      0.00, 0.02, -0.10;
  mpc_cfg.hazard_modes = {2};
  if (mpc_cfg.x_ref.isZero())
    mpc_cfg.x_ref << 0.0, 0.0, 50.0, 0.0, 0.0, -1.5;

  StateVector x{{400.0, -250.0, 1500.0}, {4.0, -3.0, -20.0}};
  Eigen::VectorXd p = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  const Vec3 lambda_forecast(0.01, 0.005, 0.02);

  const fs::path dir = ensure_out_dir(args);
  std::ofstream out(dir / "mpc_trace.csv");
  out << "t,x,y,z,vx,vy,vz,ux,uy,uz,cost,hazard_prob,fallback\n";
  const Eigen::MatrixXd step = expm(l * mpc_cfg.dt);
  for (int k = 0; k < cycles; ++k) {
    const MpcSolution sol = solve_mpc(x, p, l, lambda_forecast, mpc_cfg);
    const Vec3 u = sol.controls.col(0);
    out << format_double(k * mpc_cfg.dt);
    const Vec6 xv = x.vec();
    for (int i = 0; i < 6; ++i) out << ',' << format_double(xv[i]);
    for (int i = 0; i < 3; ++i) out << ',' << format_double(u[i]);
    out << ',' << format_double(sol.cost) << ',' << format_double(p[2]) << ','
        << (sol.infeasible_fallback ? 1 : 0) << "\n";

    x.p += x.v * mpc_cfg.dt;
    x.v += u * mpc_cfg.dt;
    p = step * p;
    p /= p.sum();
  }
  std::cout << "wrote " << (dir / "mpc_trace.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-state fusion monitor for powered-descent telemetry"};
  app.require_subcommand(1);

  CommonArgs args;
  int fault_runs = 100, nominal_runs = 20, threads = 0, bootstrap_b = 200,
      mpc_cycles = 40;

  auto add_common = [&](CLI::App* sub, bool with_input) {
    sub->add_option("--config", args.config_path, "JSON configuration file");
    sub->add_option("--seed", args.seed, "base random seed");
    sub->add_option("--out", args.out_dir, "output directory");
    if (with_input)
      sub->add_option("--input", args.input_path, "telemetry CSV (skips simulation)");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "generate synthetic telemetry");
  add_common(simulate, false);
  simulate->add_flag("--emit-truth", args.emit_truth, "append truth columns");

  CLI::App* run = app.add_subcommand("run", "run the fusion monitor");
  add_common(run, true);

  CLI::App* ekf = app.add_subcommand("ekf", "run the baseline filter only");
  add_common(ekf, true);

  CLI::App* compare =
      app.add_subcommand("compare", "seeded co-state vs EKF alarm experiment");
  add_common(compare, false);
  compare->add_option("--runs", fault_runs, "fault-injected runs");
  compare->add_option("--nominal", nominal_runs, "fault-free runs");
  compare->add_option("--threads", threads, "worker threads (0 = auto)");

  CLI::App* calibrate =
      app.add_subcommand("calibrate", "generator calibration diagnostics");
  add_common(calibrate, true);
  calibrate->add_option("--bootstrap", bootstrap_b, "bootstrap resamples");

  CLI::App* mpc_demo = app.add_subcommand("mpc-demo", "risk-aware control demo");
  add_common(mpc_demo, false);
  mpc_demo->add_option("--cycles", mpc_cycles, "control cycles to roll out");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(args);
    if (run->parsed()) return cmd_run(args);
    if (ekf->parsed()) return cmd_ekf(args);
    if (compare->parsed()) return cmd_compare(args, fault_runs, nominal_runs, threads);
    if (calibrate->parsed()) return cmd_calibrate(args, bootstrap_b);
    if (mpc_demo->parsed()) return cmd_mpc_demo(args, mpc_cycles);
  } catch (const InputFormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
