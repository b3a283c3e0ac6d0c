#pragma once

#include <cstdint>
#include <vector>

#include "csfusion/types.hpp"

namespace csfusion {

/// One smooth change of the reference descent rate: |v_ref| gains `dv` [m/s]
/// above the altitude band [z_lo, z_hi], blended with a cubic smoothstep.
struct ProfileStep {
  double z_lo = 0.0;
  double z_hi = 0.0;
  double dv = 0.0;
};

struct DescentConfig {
  // Constant glide-slope approach toward the origin: the horizontal offset
  // stays proportional to altitude, which keeps the sensing geometry (and
  // with it the co-state scale) steady through the descent.
  StateVector initial{{18000.0, -12000.0, 30000.0}, {-18.0, 12.0, -30.0}};

  // Classification bands [m]; strictly decreasing.
  double phase_upper = 7000.0;
  double phase_lower = 2000.0;

  double gravity = 1.62;  // lunar surface gravity [m/s^2]

  // Reference descent-rate profile: |v_ref|(z) = base_rate + sum of steps.
  // Constant-rate plateaus separate gentle braking ramps; the band around the
  // 7 km boundary is deliberately a plateau.
  double base_rate = 1.5;
  std::vector<ProfileStep> profile{
      {30.0, 1300.0, 8.5}, {1500.0, 5600.0, 12.0}, {8000.0, 16000.0, 8.0}};

  double gain_vertical = 0.06;    // [1/s] proportional braking gain
  double gain_horizontal = 0.05;  // [1/s] horizontal glide tracking gain

  double sample_period = 0.1;      // [s]
  double sample_jitter = 0.2;      // uniform fraction of the period
  Vec3 noise_std{0.3, 0.6, 7e-4};  // altitude, range, vertical rate

  double oosm_fraction = 0.05;
  int oosm_max_delay = 5;  // in nominal periods

  double soft_landing_bound = 2.0;  // [m/s]
  double max_duration = 2400.0;     // [s] hard stop
  std::uint64_t seed = 0;

  void validate() const;
};

struct FaultConfig {
  enum class Kind { kNone, kThrustMapScale, kTimingMisalignment, kSaturationModelError };

  Kind kind = Kind::kNone;
  /// thrust_map_scale: executed = magnitude * commanded.
  /// timing_misalignment: first-order actuation lag, magnitude seconds.
  /// saturation_model_error: executed thrust capped at magnitude [m/s^2].
  double magnitude = 1.0;
  double onset_altitude = 7000.0;
  double onset_time = -1.0;  // >= 0 switches to time-triggered onset

  void validate() const;
  bool active(double t, double altitude) const;
};

struct TelemetrySample {
  double t = 0.0;
  double arrival_t = 0.0;
  Measurement y;
  StateVector truth;
  bool has_truth = true;
  // Simulation-side extras for diagnostics and tests.
  double commanded_vertical_accel = 0.0;
  double executed_vertical_accel = 0.0;
  bool delayed = false;
};

struct DescentResult {
  std::vector<TelemetrySample> samples;  // sorted by arrival time
  double touchdown_t = 0.0;
  double touchdown_speed = 0.0;  // |v_z| at ground contact
  bool reached_ground = false;
};

/// Signed reference vertical rate at altitude z (negative while descending).
double reference_rate(double z, const DescentConfig& cfg);
/// d|v_ref|/dz, used for the guidance feedforward.
double reference_rate_slope(double z, const DescentConfig& cfg);

/// Commanded thrust acceleration (gravity compensation plus profile
/// tracking) at the given true state.
Vec3 guidance_command(const StateVector& x, const DescentConfig& cfg);

int phase_of(double altitude, const DescentConfig& cfg);

/// Closed-loop synthetic descent. The executed thrust deviates from the
/// commanded one per FaultConfig; telemetry is sampled from the truth with
/// jittered timing, additive Gaussian noise and a configurable fraction of
/// delayed (out-of-sequence) deliveries.
DescentResult simulate_descent(const DescentConfig& cfg, const FaultConfig& fault);

}  // namespace csfusion
