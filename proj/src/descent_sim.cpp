#include "csfusion/descent_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "csfusion/errors.hpp"
#include "csfusion/measurement_model.hpp"

namespace csfusion {

void DescentConfig::validate() const {
  if (!initial.finite()) throw InvalidConfigError("initial state must be finite");
  if (!(phase_upper > phase_lower) || !(phase_lower > 0.0))
    throw InvalidConfigError("phase boundaries must be strictly decreasing and positive");
  if (!(noise_std.minCoeff() > 0.0))
    throw InvalidConfigError("sensor noise levels must be positive");
  if (!(sample_period > 0.0)) throw InvalidConfigError("sample period must be positive");
  if (sample_jitter < 0.0 || sample_jitter >= 1.0)
    throw InvalidConfigError("sample jitter fraction must lie in [0, 1)");
  if (oosm_fraction < 0.0 || oosm_fraction > 1.0)
    throw InvalidConfigError("out-of-sequence fraction must lie in [0, 1]");
  if (oosm_max_delay < 1) throw InvalidConfigError("delay bound must be >= 1 period");
  if (!(base_rate > 0.0)) throw InvalidConfigError("base descent rate must be positive");
  for (const auto& s : profile)
    if (!(s.z_hi > s.z_lo) || s.dv < 0.0)
      throw InvalidConfigError("profile steps need z_hi > z_lo and dv >= 0");
}

void FaultConfig::validate() const {
  if (!std::isfinite(magnitude)) throw InvalidConfigError("fault magnitude must be finite");
  switch (kind) {
    case Kind::kThrustMapScale:
      if (!(magnitude > 0.0)) throw InvalidConfigError("thrust scale must be positive");
      break;
    case Kind::kTimingMisalignment:
      if (!(magnitude > 0.0)) throw InvalidConfigError("actuation lag must be positive");
      break;
    case Kind::kSaturationModelError:
      if (!(magnitude > 0.0)) throw InvalidConfigError("saturation cap must be positive");
      break;
    case Kind::kNone:
      break;
  }
}

bool FaultConfig::active(double t, double altitude) const {
  if (kind == Kind::kNone) return false;
  if (onset_time >= 0.0) return t >= onset_time;
  return altitude <= onset_altitude;
}

namespace {

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

double smoothstep_slope(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return 6.0 * u * (1.0 - u);
}

}  // namespace

double reference_rate(double z, const DescentConfig& cfg) {
  double mag = cfg.base_rate;
  for (const auto& s : cfg.profile)
    mag += s.dv * smoothstep((z - s.z_lo) / (s.z_hi - s.z_lo));
  return -mag;
}

double reference_rate_slope(double z, const DescentConfig& cfg) {
  double slope = 0.0;
  for (const auto& s : cfg.profile) {
    const double span = s.z_hi - s.z_lo;
    slope += s.dv * smoothstep_slope((z - s.z_lo) / span) / span;
  }
  return slope;
}

Vec3 guidance_command(const StateVector& x, const DescentConfig& cfg) {
  const double z = x.p.z();
  const double v_ref = reference_rate(z, cfg);
  // Feedforward: d v_ref/dt = -d|v_ref|/dz * v_z along the profile.
  const double ff = -reference_rate_slope(z, cfg) * x.v.z();
  const double az = cfg.gravity + ff + cfg.gain_vertical * (v_ref - x.v.z());

  // Horizontal: hold the configured glide slope toward the origin, so the
  // cross-range offset shrinks in proportion to altitude.
  const double glide = cfg.initial.p.head<2>().norm() /
                       std::max(cfg.initial.p.z(), 1.0);
  const double rho = x.p.head<2>().norm();
  Eigen::Vector2d v_h_ref = Eigen::Vector2d::Zero();
  if (rho > 1.0) v_h_ref = (-x.p.head<2>() / rho) * glide * std::abs(v_ref);
  const Eigen::Vector2d a_h = cfg.gain_horizontal * (v_h_ref - x.v.head<2>());
  return {a_h.x(), a_h.y(), az};
}

int phase_of(double altitude, const DescentConfig& cfg) {
  if (altitude >= cfg.phase_upper) return 0;
  if (altitude >= cfg.phase_lower) return 1;
  return 2;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct SimState {
  Vec3 p;
  Vec3 v;
  // Guidance steers its own propagated state, which assumes commanded thrust
  // is executed faithfully. Nominally it coincides with the truth; an
  // execution fault makes the two diverge, so the commanded profile no longer
  // matches the effective dynamics.
  Vec3 p_belief;
  Vec3 v_belief;
  Vec3 lag;  // executed thrust state for the actuation-lag fault
};

Vec3 executed_thrust(const Vec3& commanded, const SimState& s, double t,
                     const FaultConfig& fault) {
  if (!fault.active(t, s.p.z())) return commanded;
  switch (fault.kind) {
    case FaultConfig::Kind::kThrustMapScale:
      return fault.magnitude * commanded;
    case FaultConfig::Kind::kSaturationModelError: {
      const double mag = commanded.norm();
      if (mag <= fault.magnitude || mag == 0.0) return commanded;
      return commanded * (fault.magnitude / mag);
    }
    case FaultConfig::Kind::kTimingMisalignment:
      return s.lag;
    case FaultConfig::Kind::kNone:
      break;
  }
  return commanded;
}

struct Derivative {
  Vec3 dp;
  Vec3 dv;
  Vec3 dp_belief;
  Vec3 dv_belief;
  Vec3 dlag;
};

Derivative dynamics(const SimState& s, double t, const DescentConfig& cfg,
                    const FaultConfig& fault) {
  const Vec3 commanded = guidance_command({s.p_belief, s.v_belief}, cfg);
  const Vec3 thrust = executed_thrust(commanded, s, t, fault);
  const Vec3 gravity(0.0, 0.0, cfg.gravity);
  Derivative d;
  d.dp = s.v;
  d.dv = thrust - gravity;
  d.dp_belief = s.v_belief;
  d.dv_belief = commanded - gravity;
  const bool lagging = fault.kind == FaultConfig::Kind::kTimingMisalignment &&
                       fault.active(t, s.p.z());
  d.dlag = lagging ? Vec3((commanded - s.lag) / fault.magnitude) : Vec3::Zero();
  return d;
}

SimState rk4_step(const SimState& s, double t, double h, const DescentConfig& cfg,
                  const FaultConfig& fault) {
  auto advance = [](const SimState& base, const Derivative& d, double scale) {
    SimState out;
    out.p = base.p + scale * d.dp;
    out.v = base.v + scale * d.dv;
    out.p_belief = base.p_belief + scale * d.dp_belief;
    out.v_belief = base.v_belief + scale * d.dv_belief;
    out.lag = base.lag + scale * d.dlag;
    return out;
  };
  const Derivative k1 = dynamics(s, t, cfg, fault);
  const Derivative k2 = dynamics(advance(s, k1, 0.5 * h), t + 0.5 * h, cfg, fault);
  const Derivative k3 = dynamics(advance(s, k2, 0.5 * h), t + 0.5 * h, cfg, fault);
  const Derivative k4 = dynamics(advance(s, k3, h), t + h, cfg, fault);
  SimState out;
  out.p = s.p + h / 6.0 * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
  out.v = s.v + h / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
  out.p_belief =
      s.p_belief + h / 6.0 * (k1.dp_belief + 2.0 * k2.dp_belief +
                              2.0 * k3.dp_belief + k4.dp_belief);
  out.v_belief =
      s.v_belief + h / 6.0 * (k1.dv_belief + 2.0 * k2.dv_belief +
                              2.0 * k3.dv_belief + k4.dv_belief);
  out.lag = s.lag + h / 6.0 * (k1.dlag + 2.0 * k2.dlag + 2.0 * k3.dlag + k4.dlag);
  return out;
}

}  // namespace

DescentResult simulate_descent(const DescentConfig& cfg, const FaultConfig& fault) {
  cfg.validate();
  fault.validate();

  std::uint64_t root = cfg.seed ^ 0x6a09e667f3bcc908ull;
  std::uint64_t noise_seed = splitmix64(root);
  std::uint64_t jitter_seed = splitmix64(root);
  std::uint64_t delay_seed = splitmix64(root);
  std::mt19937_64 noise_rng(noise_seed);
  std::mt19937_64 jitter_rng(jitter_seed);
  std::mt19937_64 delay_rng(delay_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> delay_steps(1, cfg.oosm_max_delay);

  SimState s{cfg.initial.p, cfg.initial.v, cfg.initial.p, cfg.initial.v,
             guidance_command(cfg.initial, cfg)};
  double t = 0.0;

  DescentResult result;
  constexpr double kMaxSubstep = 0.05;

  auto record_sample = [&](double stamp, const SimState& state) {
    TelemetrySample sample;
    sample.t = stamp;
    const StateVector truth{state.p, state.v};
    sample.truth = truth;
    const Measurement clean = eval_h(truth);
    sample.y.altitude = clean.altitude + cfg.noise_std[0] * gauss(noise_rng);
    sample.y.range =
        std::max(0.0, clean.range + cfg.noise_std[1] * gauss(noise_rng));
    sample.y.vertical_velocity =
        clean.vertical_velocity + cfg.noise_std[2] * gauss(noise_rng);
    const Vec3 commanded = guidance_command({state.p_belief, state.v_belief}, cfg);
    sample.commanded_vertical_accel = commanded.z();
    sample.executed_vertical_accel = executed_thrust(commanded, state, stamp, fault).z();
    sample.delayed = unit(delay_rng) < cfg.oosm_fraction;
    sample.arrival_t =
        sample.delayed ? stamp + cfg.sample_period * delay_steps(delay_rng) : stamp;
    if (!sample.delayed) (void)delay_steps(delay_rng);  // keep the stream aligned
    result.samples.push_back(sample);
  };

  record_sample(0.0, s);

  while (t < cfg.max_duration) {
    const double jitter = 1.0 + cfg.sample_jitter * (2.0 * unit(jitter_rng) - 1.0);
    const double next_t = t + cfg.sample_period * jitter;

    double step_t = t;
    SimState step_s = s;
    bool grounded = false;
    while (step_t < next_t - 1e-12) {
      const double h = std::min(kMaxSubstep, next_t - step_t);
      const SimState trial = rk4_step(step_s, step_t, h, cfg, fault);
      if (trial.p.z() <= 0.0) {
        // Linear interpolation of the crossing keeps the ending clean.
        const double frac =
            step_s.p.z() / std::max(step_s.p.z() - trial.p.z(), 1e-12);
        result.touchdown_t = step_t + frac * h;
        result.touchdown_speed = std::abs(step_s.v.z());
        result.reached_ground = true;
        grounded = true;
        break;
      }
      step_s = trial;
      step_t += h;
    }
    if (grounded) break;
    s = step_s;
    t = next_t;
    record_sample(t, s);
  }
  if (!result.reached_ground) result.touchdown_t = t;

  std::stable_sort(result.samples.begin(), result.samples.end(),
                   [](const TelemetrySample& a, const TelemetrySample& b) {
                     if (a.arrival_t != b.arrival_t) return a.arrival_t < b.arrival_t;
                     return a.t < b.t;
                   });
  return result;
}

}  // namespace csfusion
