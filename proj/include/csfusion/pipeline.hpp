#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "csfusion/alarms.hpp"
#include "csfusion/bayes_correction.hpp"
#include "csfusion/costate.hpp"
#include "csfusion/descent_sim.hpp"
#include "csfusion/ekf.hpp"
#include "csfusion/generator.hpp"
#include "csfusion/regimes.hpp"
#include "csfusion/types.hpp"

namespace csfusion {

enum class WeightingSource { kRollingRms, kInfoMetric };

struct AlarmConfig {
  int window = 20;
  int consecutive = 3;
  double kappa = 6.0;             // co-state threshold: mu + kappa * sigma
  double sigma_floor_frac = 0.08; // relative floor on the frozen sigma
  double ekf_level = 0.999;       // chi-square quantile for the NIS detector
};

struct EkfConfig {
  double accel_psd = 0.1;  // white-acceleration intensity [m^2/s^3]
  Vec3 meas_noise_std{0.3, 0.6, 7e-4};
  double p0_pos = 25.0;
  double p0_vel = 1.0;
};

struct BayesConfig {
  bool enabled = true;
  CorrectionConfig correction;
  double activation_quantile = 0.9;  // on recent ||delta lambda||
  int activation_window = 200;
  int activation_min = 50;
  /// Extra divisor on the nondimensionalized correction inputs; keeps
  /// routine activations gentle while genuine excursions stay decisive.
  double scale_multiplier = 8.0;
};

struct PipelineConfig {
  WeightingSource weighting = WeightingSource::kRollingRms;
  int innovation_window = 100;
  double sigma_min = 1e-3;
  EpsilonPolicy epsilon;
  ClusterConfig cluster;  // k, warm-up, seeding separation
  int generator_cadence = 100;
  int trajectory_capacity = 2000;
  int distance_subsample = 128;
  bool mle_refine = true;
  int oosm_buffer = 10;
  AlarmConfig alarm;
  EkfConfig ekf;
  BayesConfig bayes;
  double info_alpha = 1.0;
  double info_beta = 1.0;
  /// Whitened-innovation floor below which samples are numerical dust and
  /// feed neither the regime model nor the alarms.
  double feature_gate = 1e-6;

  void validate() const;
};

struct TraceRow {
  double t = 0.0;
  double dt = 0.0;
  Vec3 lambda = Vec3::Zero();
  double lambda_norm = 0.0;
  double z = 0.0;
  int mode = -1;  // -1 before clustering warm-up
  Eigen::VectorXd p;
  double hazard_prob = 0.0;
  double mfpt = std::numeric_limits<double>::infinity();
  double lyapunov = 0.0;
  double ekf_nis = 0.0;
  bool costate_alarm = false;
  bool ekf_alarm = false;
  bool corrected = false;
};

struct RunSummary {
  std::optional<double> first_costate_alarm_t;
  std::optional<double> first_ekf_alarm_t;
  double peak_hazard_prob = 0.0;
  double mean_calibration_error = 0.0;
  double touchdown_t = 0.0;
  int dropped_late = 0;
  int skipped_nonfinite = 0;
  // Per-window exceedance bookkeeping (false-alarm accounting).
  std::int64_t windows_observed = 0;
  std::int64_t costate_windows_exceeding = 0;
  std::int64_t ekf_windows_exceeding = 0;
};

struct RiskReport {
  std::vector<TraceRow> rows;
  RunSummary summary;
  std::vector<double> calibration_trace;
  ModeModel modes;         // empty (k = 0) when warm-up never completed
  Eigen::MatrixXd generator;
};

/// Streaming fusion monitor. Samples are ingested in arrival order; late
/// measurement times within the checkpoint buffer trigger bounded retroactive
/// reprocessing, older ones are dropped with a diagnostic count.
class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, const StateVector& x0);

  void ingest(const TelemetrySample& sample);
  RiskReport finish(double touchdown_t);

  const PipelineConfig& config() const { return cfg_; }
  std::size_t checkpoint_depth() const { return history_.size(); }
  bool warm() const { return core_.model_ready; }

 private:
  struct TrajEntry {
    double t;
    Eigen::Matrix<double, 5, 1> x;
    int mode;
  };

  /// Everything a retroactive replay must restore; kept cheap to copy.
  struct Core {
    bool initialized = false;
    double prev_t = 0.0;
    Vec3 prev_y = Vec3::Zero();
    StateVector x;
    InnovationWindow window{50};
    Vec3 prev_lambda = Vec3::Zero();
    bool have_prev_lambda = false;

    OnlineClusterer features;
    OnlineClusterer costates;
    bool model_ready = false;
    ModeModel modes;
    Eigen::MatrixXd lambda_centroids;
    // RMS co-state magnitude frozen at warm-up; nondimensionalizes the
    // exponential correction inputs.
    double lambda_scale = 1.0;

    Eigen::MatrixXd gen;
    bool gen_ready = false;
    Eigen::VectorXd p;
    int samples_since_refit = 0;
    Eigen::VectorXd mfpt_by_mode;
    bool mfpt_ready = false;

    WindowedAlarm costate_alarm;
    WindowedAlarm ekf_alarm;
    FrozenNominalStats nominal_stats;

    std::deque<double> dlam_norms;

    EkfState ekf;

    std::int64_t windows_observed = 0;
    std::int64_t costate_windows_exceeding = 0;
    std::int64_t ekf_windows_exceeding = 0;

    Core(const PipelineConfig& cfg, const StateVector& x0);
  };

  struct Checkpoint {
    TelemetrySample sample;
    Core before;
    std::size_t rows;
    std::size_t traj;
    std::size_t calib;
  };

  void process(const TelemetrySample& sample);
  void checkpoint_and_process(const TelemetrySample& sample);
  void refit_generator();

  PipelineConfig cfg_;
  Core core_;
  std::deque<Checkpoint> history_;
  std::vector<TrajEntry> traj_log_;   // append-only; truncated on rewind
  std::vector<TraceRow> rows_;        // append-only; truncated on rewind
  std::vector<double> calib_log_;     // append-only; truncated on rewind
  int dropped_late_ = 0;
  int skipped_nonfinite_ = 0;
};

/// Drives a full arrival-ordered stream through a Pipeline.
/// Throws InputFormatError when the stream is not sorted by arrival time.
RiskReport run_pipeline(const std::vector<TelemetrySample>& arrivals,
                        const PipelineConfig& cfg, const StateVector& x0,
                        double touchdown_t);

}  // namespace csfusion
