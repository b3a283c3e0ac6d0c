#include "csfusion/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "csfusion/errors.hpp"
#include "csfusion/measurement_model.hpp"
#include "csfusion/stats.hpp"

namespace csfusion {

void PipelineConfig::validate() const {
  if (innovation_window < 1) throw InvalidConfigError("innovation window must be >= 1");
  if (!(sigma_min > 0.0)) throw InvalidConfigError("sigma floor must be positive");
  if (cluster.k < 2) throw InvalidConfigError("need at least two modes");
  if (generator_cadence < 1) throw InvalidConfigError("generator cadence must be >= 1");
  if (trajectory_capacity < 2 * cluster.k)
    throw InvalidConfigError("trajectory window too small for the mode count");
  if (oosm_buffer < 1) throw InvalidConfigError("checkpoint buffer must hold >= 1 sample");
  if (alarm.window < 1 || alarm.consecutive < 1)
    throw InvalidConfigError("alarm window and streak must be >= 1");
  if (!(alarm.ekf_level > 0.0 && alarm.ekf_level < 1.0))
    throw InvalidConfigError("NIS detector level must lie in (0, 1)");
  if (!(ekf.meas_noise_std.minCoeff() > 0.0))
    throw InvalidConfigError("EKF measurement noise must be positive");
  if (bayes.activation_min < 2)
    throw InvalidConfigError("correction activation needs >= 2 history entries");
}

Pipeline::Core::Core(const PipelineConfig& cfg, const StateVector& x0)
    : x(x0),
      window(static_cast<std::size_t>(cfg.innovation_window)),
      features(5, cfg.cluster),
      costates(3,
               [&] {
                 ClusterConfig c = cfg.cluster;
                 c.standardize = false;
                 return c;
               }()),
      gen(Eigen::MatrixXd::Zero(cfg.cluster.k, cfg.cluster.k)),
      p(Eigen::VectorXd::Constant(cfg.cluster.k, 1.0 / cfg.cluster.k)),
      mfpt_by_mode(Eigen::VectorXd::Constant(
          cfg.cluster.k, std::numeric_limits<double>::infinity())),
      costate_alarm(cfg.alarm.window, cfg.alarm.consecutive),
      ekf_alarm(cfg.alarm.window, cfg.alarm.consecutive) {
  ekf.x = x0.vec();
  Mat6 p0 = Mat6::Zero();
  p0.topLeftCorner<3, 3>() = cfg.ekf.p0_pos * Mat3::Identity();
  p0.bottomRightCorner<3, 3>() = cfg.ekf.p0_vel * Mat3::Identity();
  ekf.p = p0;
}

Pipeline::Pipeline(PipelineConfig cfg, const StateVector& x0)
    : cfg_(std::move(cfg)), core_(cfg_, x0) {
  cfg_.validate();
  if (!x0.finite()) throw InvalidStateError("initial state must be finite");
}

namespace {

double deque_quantile(const std::deque<double>& values, double q) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= v.size()) return v.back();
  return v[i] * (1.0 - frac) + v[i + 1] * frac;
}

}  // namespace

void Pipeline::refit_generator() {
  const std::size_t n = traj_log_.size();
  const auto cap = static_cast<std::size_t>(cfg_.trajectory_capacity);
  const std::size_t begin = n > cap ? n - cap : 0;
  if (n - begin < 2) return;

  LabeledTrajectory window;
  window.k = cfg_.cluster.k;
  window.samples.reserve(n - begin);
  std::vector<int> occupancy(static_cast<std::size_t>(cfg_.cluster.k), 0);
  int jumps = 0;
  for (std::size_t i = begin; i < n; ++i) {
    const TrajEntry& e = traj_log_[i];
    LabeledSample s;
    s.t = e.t;
    s.x = e.x;
    s.mode = e.mode;
    ++occupancy[static_cast<std::size_t>(e.mode)];
    if (!window.samples.empty() && window.samples.back().mode != e.mode) ++jumps;
    window.samples.push_back(std::move(s));
  }
  for (int count : occupancy)
    if (count == 0) return;  // keep the previous generator until every mode recurs
  if (jumps == 0) return;

  // Refresh the mode snapshot and co-state centroids alongside the refit.
  core_.modes = label_regimes(core_.features.snapshot());
  core_.lambda_centroids = core_.costates.snapshot().centroids;

  const TransitionStats stats = collect_transitions(window);
  Eigen::MatrixXd fitted;
  if (cfg_.mle_refine) {
    fitted = enforce_generator_validity(mle_generator(stats.n_jumps, stats.dwell));
  } else {
    const InterclusterDistances dist =
        intercluster_distances(window, cfg_.distance_subsample);
    const DriftEstimate drift = estimate_drift(window, stats, dist);
    const DiffusionEstimate diff = estimate_diffusion(window, stats, drift, dist);
    fitted = enforce_generator_validity(
        assemble_generator(drift.a_pair, diff.sigma_pair));
  }
  core_.gen = fitted;
  core_.gen_ready = true;

  // One-step calibration: occupancy of the window against its one-sample
  // shift, propagated over the mean interval.
  const std::size_t m = window.samples.size();
  Eigen::VectorXd hist0 = Eigen::VectorXd::Zero(cfg_.cluster.k);
  Eigen::VectorXd hist1 = Eigen::VectorXd::Zero(cfg_.cluster.k);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    hist0[window.samples[i].mode] += 1.0;
    hist1[window.samples[i + 1].mode] += 1.0;
  }
  hist0 /= hist0.sum();
  hist1 /= hist1.sum();
  const double mean_dt =
      (window.samples.back().t - window.samples.front().t) / static_cast<double>(m - 1);
  calib_log_.push_back(calibration_error(core_.gen, mean_dt, hist0, hist1));

  const std::vector<int> hazard = core_.modes.hazard_modes();
  core_.mfpt_by_mode =
      Eigen::VectorXd::Constant(cfg_.cluster.k, std::numeric_limits<double>::infinity());
  if (!hazard.empty() && static_cast<int>(hazard.size()) < cfg_.cluster.k) {
    try {
      const MfptResult res = mfpt(core_.gen, hazard);
      for (std::size_t i = 0; i < res.transient_modes.size(); ++i)
        core_.mfpt_by_mode[res.transient_modes[i]] =
            res.hitting_time[static_cast<long>(i)];
      for (int h : hazard) core_.mfpt_by_mode[h] = 0.0;
      core_.mfpt_ready = true;
    } catch (const UnreachableHazardError&) {
      core_.mfpt_ready = false;  // rows keep reporting infinity
    }
  }
}

void Pipeline::process(const TelemetrySample& sample) {
  if (!sample.y.finite()) {
    ++skipped_nonfinite_;
    return;
  }

  if (!core_.initialized) {
    core_.prev_t = sample.t;
    core_.prev_y = sample.y.vec();
    core_.initialized = true;
    TraceRow row;
    row.t = sample.t;
    row.p = core_.p;
    row.ekf_nis = 0.0;
    rows_.push_back(std::move(row));
    return;
  }

  const double dt = sample.t - core_.prev_t;
  if (!(dt > 0.0)) {
    ++skipped_nonfinite_;
    return;
  }

  const Mat36 h = eval_jacobian(core_.x);
  const Vec3 eta = predicted_increment(core_.x);
  // The whitening needs a full window before its scale is trustworthy; the
  // regime and alarm layers stay dormant until then.
  const bool sigma_warm = core_.window.size() >= core_.window.capacity();
  const Vec3 sigma_sq =
      cfg_.weighting == WeightingSource::kRollingRms
          ? rolling_rms_sigma(core_.window, cfg_.sigma_min)
          : info_weighting(h, Mat6::Identity(), cfg_.info_alpha, cfg_.info_beta,
                           cfg_.sigma_min);
  const double eps = adaptive_epsilon(h, cfg_.epsilon);
  const Vec3 y = sample.y.vec();
  const Vec3 dy = y - core_.prev_y;

  // Whitened multiplier: the consistency signal driving features and alarms.
  const Vec3 lambda = compute_costate(h, sigma_sq, dy, eta, dt, eps);
  const double z = whitened_innovation(dy, eta, dt, sigma_sq);

  // The state projection uses the unwhitened law so the correction lives in
  // measurement-rate units and the internal state tracks the geometry.
  const Vec3 lambda_state = compute_costate(h, Vec3::Ones(), dy, eta, dt, eps);
  const StateVector x_next = project_state_update(core_.x, lambda_state, h, dt);
  const Vec6 f_dt = eval_dynamics(core_.x).vec() * dt;
  const double v_value = lyapunov_value(x_next.vec() - core_.x.vec(), f_dt, h, eps);

  core_.window.push(sample.t, dy - eta * dt);
  core_.x = x_next;

  const FeatureVector phi = extract_features(lambda, z, sample.t);
  const bool meaningful = sigma_warm && z > cfg_.feature_gate;
  if (meaningful) {
    core_.features.observe(phi.as_vector());
    core_.costates.observe(lambda);
  }

  if (!core_.model_ready && core_.features.warm() && core_.costates.warm()) {
    core_.modes = label_regimes(core_.features.snapshot());
    core_.lambda_centroids = core_.costates.snapshot().centroids;
    const Eigen::VectorXd mu = core_.costates.running_mean();
    const Eigen::VectorXd sd = core_.costates.running_std();
    core_.lambda_scale =
        std::max(std::sqrt(mu.squaredNorm() + sd.squaredNorm()), 1e-12);
    core_.p = Eigen::VectorXd::Constant(cfg_.cluster.k, 1.0 / cfg_.cluster.k);
    core_.costate_alarm.set_threshold(core_.nominal_stats.threshold(
        cfg_.alarm.kappa, cfg_.alarm.sigma_floor_frac));
    core_.ekf_alarm.set_threshold(chi2_3_quantile(cfg_.alarm.ekf_level));
    core_.model_ready = true;
  }

  TraceRow row;
  row.t = sample.t;
  row.dt = dt;
  row.lambda = lambda;
  row.lambda_norm = lambda.norm();
  row.z = z;
  row.lyapunov = v_value;

  if (core_.model_ready) {
    const int mode = core_.modes.assign(phi.as_vector());
    row.mode = mode;
    traj_log_.push_back({sample.t, phi.as_vector(), mode});

    if (core_.have_prev_lambda) {
      const Vec3 dlam = lambda - core_.prev_lambda;
      core_.dlam_norms.push_back(dlam.norm());
      while (core_.dlam_norms.size() >
             static_cast<std::size_t>(cfg_.bayes.activation_window))
        core_.dlam_norms.pop_front();
    }

    if (++core_.samples_since_refit >= cfg_.generator_cadence) {
      core_.samples_since_refit = 0;
      refit_generator();
    }

    if (core_.gen_ready) core_.p = propagate_probabilities(core_.gen, core_.p, dt);

    if (cfg_.bayes.enabled && core_.have_prev_lambda &&
        core_.dlam_norms.size() >=
            static_cast<std::size_t>(cfg_.bayes.activation_min) &&
        core_.lambda_centroids.rows() == cfg_.cluster.k) {
      const Vec3 dlam = lambda - core_.prev_lambda;
      const double gate =
          deque_quantile(core_.dlam_norms, cfg_.bayes.activation_quantile);
      if (dlam.norm() > gate) {
        const double s = core_.lambda_scale * cfg_.bayes.scale_multiplier;
        core_.p = correct_probabilities(core_.p, core_.lambda_centroids / s,
                                        dlam / s, dt, cfg_.bayes.correction);
        row.corrected = true;
      }
    }

    double hazard_mass = 0.0;
    for (int hm : core_.modes.hazard_modes()) hazard_mass += core_.p[hm];
    row.hazard_prob = hazard_mass;

    if (core_.mfpt_ready) {
      const std::vector<int> hz = core_.modes.hazard_modes();
      auto is_hazard = [&](int j) {
        return std::find(hz.begin(), hz.end(), j) != hz.end();
      };
      int best = -1;
      double best_p = -1.0;
      for (int j = 0; j < cfg_.cluster.k; ++j) {
        if (!is_hazard(j) && core_.p[j] > best_p) {
          best_p = core_.p[j];
          best = j;
        }
      }
      if (best >= 0) row.mfpt = core_.mfpt_by_mode[best];
    }
  }
  row.p = core_.p;

  if (meaningful) {
    core_.prev_lambda = lambda;
    core_.have_prev_lambda = true;
  }

  // Baseline filter on the same stream.
  const Mat6 q_d = ekf_process_noise(dt, cfg_.ekf.accel_psd);
  const Mat3 r = cfg_.ekf.meas_noise_std.cwiseProduct(cfg_.ekf.meas_noise_std)
                     .asDiagonal();
  const EkfState predicted = ekf_predict(core_.ekf, dt, q_d);
  const EkfUpdateResult upd = ekf_update(predicted, sample.y, r);
  core_.ekf = upd.state;
  row.ekf_nis = upd.nis;

  if (meaningful) {
    core_.costate_alarm.observe(row.lambda_norm, sample.t);
    core_.ekf_alarm.observe(upd.nis, sample.t);
  }
  if (meaningful && !core_.model_ready && core_.costate_alarm.window_full())
    core_.nominal_stats.push(core_.costate_alarm.rolling_mean());
  if (core_.model_ready) {
    ++core_.windows_observed;
    if (core_.costate_alarm.exceeding()) ++core_.costate_windows_exceeding;
    if (core_.ekf_alarm.exceeding()) ++core_.ekf_windows_exceeding;
  }
  row.costate_alarm = core_.costate_alarm.alarmed();
  row.ekf_alarm = core_.ekf_alarm.alarmed();

  rows_.push_back(std::move(row));
  core_.prev_t = sample.t;
  core_.prev_y = y;
}

void Pipeline::checkpoint_and_process(const TelemetrySample& sample) {
  history_.push_back(
      {sample, core_, rows_.size(), traj_log_.size(), calib_log_.size()});
  while (history_.size() > static_cast<std::size_t>(cfg_.oosm_buffer))
    history_.pop_front();
  process(sample);
}

void Pipeline::ingest(const TelemetrySample& sample) {
  if (!core_.initialized || sample.t >= core_.prev_t) {
    checkpoint_and_process(sample);
    return;
  }

  // Late measurement: splice it into the checkpointed suffix when possible.
  if (history_.empty() || sample.t < history_.front().sample.t) {
    ++dropped_late_;
    return;
  }
  std::size_t pos = 0;
  while (pos < history_.size() && history_[pos].sample.t <= sample.t) ++pos;
  if (pos == 0) {
    ++dropped_late_;
    return;
  }

  core_ = history_[pos].before;
  rows_.resize(history_[pos].rows);
  traj_log_.resize(history_[pos].traj);
  calib_log_.resize(history_[pos].calib);

  std::vector<TelemetrySample> replay;
  replay.push_back(sample);
  for (std::size_t i = pos; i < history_.size(); ++i)
    replay.push_back(history_[i].sample);
  history_.erase(history_.begin() + static_cast<long>(pos), history_.end());

  for (const auto& s : replay) checkpoint_and_process(s);
}

RiskReport Pipeline::finish(double touchdown_t) {
  RiskReport report;
  report.summary.touchdown_t = touchdown_t;
  report.summary.dropped_late = dropped_late_;
  report.summary.skipped_nonfinite = skipped_nonfinite_;
  report.summary.windows_observed = core_.windows_observed;
  report.summary.costate_windows_exceeding = core_.costate_windows_exceeding;
  report.summary.ekf_windows_exceeding = core_.ekf_windows_exceeding;
  if (core_.costate_alarm.alarmed())
    report.summary.first_costate_alarm_t = core_.costate_alarm.alarm_time();
  if (core_.ekf_alarm.alarmed())
    report.summary.first_ekf_alarm_t = core_.ekf_alarm.alarm_time();
  for (const auto& row : rows_)
    report.summary.peak_hazard_prob =
        std::max(report.summary.peak_hazard_prob, row.hazard_prob);
  report.summary.mean_calibration_error = sample_mean(calib_log_);
  report.calibration_trace = calib_log_;
  if (core_.model_ready) report.modes = core_.modes;
  report.generator = core_.gen;
  report.rows = std::move(rows_);
  rows_.clear();
  return report;
}

RiskReport run_pipeline(const std::vector<TelemetrySample>& arrivals,
                        const PipelineConfig& cfg, const StateVector& x0,
                        double touchdown_t) {
  for (std::size_t i = 1; i < arrivals.size(); ++i)
    if (arrivals[i].arrival_t < arrivals[i - 1].arrival_t)
      throw InputFormatError("telemetry must be sorted by arrival time (sample " +
                             std::to_string(i) + ")");
  Pipeline pipeline(cfg, x0);
  for (const auto& s : arrivals) pipeline.ingest(s);
  return pipeline.finish(touchdown_t);
}

}  // namespace csfusion
