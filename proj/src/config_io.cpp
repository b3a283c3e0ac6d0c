#include "csfusion/config_io.hpp"

#include <fstream>

#include "csfusion/errors.hpp"

namespace csfusion {

namespace {

using nlohmann::json;

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_vec3(const json& j, const char* key, Vec3& out) {
  if (!j.contains(key)) return;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 3) throw InvalidConfigError(std::string(key) + " must have 3 entries");
  out = Vec3(v[0], v[1], v[2]);
}

void read_vec6(const json& j, const char* key, Vec6& out) {
  if (!j.contains(key)) return;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 6) throw InvalidConfigError(std::string(key) + " must have 6 entries");
  for (int i = 0; i < 6; ++i) out[i] = v[i];
}

std::vector<double> to_std(const Vec3& v) { return {v[0], v[1], v[2]}; }
std::vector<double> to_std6(const Vec6& v) {
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

}  // namespace

const char* fault_kind_name(FaultConfig::Kind kind) {
  switch (kind) {
    case FaultConfig::Kind::kNone:
      return "none";
    case FaultConfig::Kind::kThrustMapScale:
      return "thrust_map_scale";
    case FaultConfig::Kind::kTimingMisalignment:
      return "timing_misalignment";
    case FaultConfig::Kind::kSaturationModelError:
      return "saturation_model_error";
  }
  return "none";
}

FaultConfig::Kind fault_kind_from_name(const std::string& name) {
  if (name == "none") return FaultConfig::Kind::kNone;
  if (name == "thrust_map_scale") return FaultConfig::Kind::kThrustMapScale;
  if (name == "timing_misalignment") return FaultConfig::Kind::kTimingMisalignment;
  if (name == "saturation_model_error") return FaultConfig::Kind::kSaturationModelError;
  throw InvalidConfigError("unknown fault kind: " + name);
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;

  if (j.contains("descent")) {
    const json& d = j.at("descent");
    read_vec3(d, "initial_position", cfg.descent.initial.p);
    read_vec3(d, "initial_velocity", cfg.descent.initial.v);
    read(d, "phase_upper", cfg.descent.phase_upper);
    read(d, "phase_lower", cfg.descent.phase_lower);
    read(d, "gravity", cfg.descent.gravity);
    read(d, "base_rate", cfg.descent.base_rate);
    if (d.contains("profile")) {
      cfg.descent.profile.clear();
      for (const auto& step : d.at("profile")) {
        ProfileStep ps;
        ps.z_lo = step.at("z_lo").get<double>();
        ps.z_hi = step.at("z_hi").get<double>();
        ps.dv = step.at("dv").get<double>();
        cfg.descent.profile.push_back(ps);
      }
    }
    read(d, "gain_vertical", cfg.descent.gain_vertical);
    read(d, "gain_horizontal", cfg.descent.gain_horizontal);
    read(d, "sample_period", cfg.descent.sample_period);
    read(d, "sample_jitter", cfg.descent.sample_jitter);
    read_vec3(d, "noise_std", cfg.descent.noise_std);
    read(d, "oosm_fraction", cfg.descent.oosm_fraction);
    read(d, "oosm_max_delay", cfg.descent.oosm_max_delay);
    read(d, "soft_landing_bound", cfg.descent.soft_landing_bound);
    read(d, "max_duration", cfg.descent.max_duration);
    read(d, "seed", cfg.descent.seed);
  }

  if (j.contains("fault")) {
    const json& f = j.at("fault");
    if (f.contains("kind"))
      cfg.fault.kind = fault_kind_from_name(f.at("kind").get<std::string>());
    read(f, "magnitude", cfg.fault.magnitude);
    read(f, "onset_altitude", cfg.fault.onset_altitude);
    read(f, "onset_time", cfg.fault.onset_time);
  }

  // The baseline filter is tuned against the simulator noise unless the
  // config pins its own values.
  cfg.pipeline.ekf.meas_noise_std = cfg.descent.noise_std;

  if (j.contains("pipeline")) {
    const json& p = j.at("pipeline");
    if (p.contains("weighting")) {
      const auto name = p.at("weighting").get<std::string>();
      if (name == "rolling_rms")
        cfg.pipeline.weighting = WeightingSource::kRollingRms;
      else if (name == "info_metric")
        cfg.pipeline.weighting = WeightingSource::kInfoMetric;
      else
        throw InvalidConfigError("unknown weighting source: " + name);
    }
    read(p, "innovation_window", cfg.pipeline.innovation_window);
    read(p, "sigma_min", cfg.pipeline.sigma_min);
    if (p.contains("epsilon")) {
      const json& e = p.at("epsilon");
      read(e, "floor", cfg.pipeline.epsilon.floor);
      read(e, "tau", cfg.pipeline.epsilon.tau);
      read(e, "cond_limit", cfg.pipeline.epsilon.cond_limit);
      read(e, "heavy_tau", cfg.pipeline.epsilon.heavy_tau);
    }
    if (p.contains("cluster")) {
      const json& c = p.at("cluster");
      read(c, "k", cfg.pipeline.cluster.k);
      read(c, "warmup", cfg.pipeline.cluster.warmup);
      read(c, "separation", cfg.pipeline.cluster.separation);
    }
    read(p, "generator_cadence", cfg.pipeline.generator_cadence);
    read(p, "trajectory_capacity", cfg.pipeline.trajectory_capacity);
    read(p, "distance_subsample", cfg.pipeline.distance_subsample);
    read(p, "mle_refine", cfg.pipeline.mle_refine);
    read(p, "oosm_buffer", cfg.pipeline.oosm_buffer);
    if (p.contains("alarm")) {
      const json& a = p.at("alarm");
      read(a, "window", cfg.pipeline.alarm.window);
      read(a, "consecutive", cfg.pipeline.alarm.consecutive);
      read(a, "kappa", cfg.pipeline.alarm.kappa);
      read(a, "sigma_floor_frac", cfg.pipeline.alarm.sigma_floor_frac);
      read(a, "ekf_level", cfg.pipeline.alarm.ekf_level);
    }
    if (p.contains("ekf")) {
      const json& e = p.at("ekf");
      read(e, "accel_psd", cfg.pipeline.ekf.accel_psd);
      read_vec3(e, "meas_noise_std", cfg.pipeline.ekf.meas_noise_std);
      read(e, "p0_pos", cfg.pipeline.ekf.p0_pos);
      read(e, "p0_vel", cfg.pipeline.ekf.p0_vel);
    }
    if (p.contains("bayes")) {
      const json& b = p.at("bayes");
      read(b, "enabled", cfg.pipeline.bayes.enabled);
      read(b, "temper_threshold", cfg.pipeline.bayes.correction.temper_threshold);
      read(b, "temper_scale", cfg.pipeline.bayes.correction.temper_scale);
      read(b, "activation_quantile", cfg.pipeline.bayes.activation_quantile);
      read(b, "activation_window", cfg.pipeline.bayes.activation_window);
      read(b, "activation_min", cfg.pipeline.bayes.activation_min);
      read(b, "scale_multiplier", cfg.pipeline.bayes.scale_multiplier);
    }
    read(p, "info_alpha", cfg.pipeline.info_alpha);
    read(p, "info_beta", cfg.pipeline.info_beta);
    read(p, "feature_gate", cfg.pipeline.feature_gate);
  }

  if (j.contains("mpc")) {
    const json& m = j.at("mpc");
    read(m, "horizon", cfg.mpc.horizon);
    read(m, "dt", cfg.mpc.dt);
    read_vec6(m, "state_weight", cfg.mpc.state_weight);
    read_vec3(m, "control_weight", cfg.mpc.control_weight);
    read_vec6(m, "x_ref", cfg.mpc.x_ref);
    read(m, "costate_weight", cfg.mpc.costate_weight);
    read(m, "inv_mfpt_weight", cfg.mpc.inv_mfpt_weight);
    read(m, "risk_max", cfg.mpc.risk_max);
    read_vec3(m, "control_lo", cfg.mpc.control_lo);
    read_vec3(m, "control_hi", cfg.mpc.control_hi);
    read(m, "max_iters", cfg.mpc.max_iters);
  }

  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputFormatError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputFormatError("config parse error: " + std::string(e.what()));
  }
  return run_config_from_json(j);
}

nlohmann::ordered_json run_config_to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;

  nlohmann::ordered_json d;
  d["initial_position"] = to_std(cfg.descent.initial.p);
  d["initial_velocity"] = to_std(cfg.descent.initial.v);
  d["phase_upper"] = cfg.descent.phase_upper;
  d["phase_lower"] = cfg.descent.phase_lower;
  d["gravity"] = cfg.descent.gravity;
  d["base_rate"] = cfg.descent.base_rate;
  d["profile"] = nlohmann::ordered_json::array();
  for (const auto& s : cfg.descent.profile)
    d["profile"].push_back({{"z_lo", s.z_lo}, {"z_hi", s.z_hi}, {"dv", s.dv}});
  d["gain_vertical"] = cfg.descent.gain_vertical;
  d["gain_horizontal"] = cfg.descent.gain_horizontal;
  d["sample_period"] = cfg.descent.sample_period;
  d["sample_jitter"] = cfg.descent.sample_jitter;
  d["noise_std"] = to_std(cfg.descent.noise_std);
  d["oosm_fraction"] = cfg.descent.oosm_fraction;
  d["oosm_max_delay"] = cfg.descent.oosm_max_delay;
  d["soft_landing_bound"] = cfg.descent.soft_landing_bound;
  d["max_duration"] = cfg.descent.max_duration;
  d["seed"] = cfg.descent.seed;
  j["descent"] = d;

  j["fault"] = {{"kind", fault_kind_name(cfg.fault.kind)},
                {"magnitude", cfg.fault.magnitude},
                {"onset_altitude", cfg.fault.onset_altitude},
                {"onset_time", cfg.fault.onset_time}};

  nlohmann::ordered_json p;
  p["weighting"] = cfg.pipeline.weighting == WeightingSource::kRollingRms
                       ? "rolling_rms"
                       : "info_metric";
  p["innovation_window"] = cfg.pipeline.innovation_window;
  p["sigma_min"] = cfg.pipeline.sigma_min;
  p["epsilon"] = {{"floor", cfg.pipeline.epsilon.floor},
                  {"tau", cfg.pipeline.epsilon.tau},
                  {"cond_limit", cfg.pipeline.epsilon.cond_limit},
                  {"heavy_tau", cfg.pipeline.epsilon.heavy_tau}};
  p["cluster"] = {{"k", cfg.pipeline.cluster.k},
                  {"warmup", cfg.pipeline.cluster.warmup},
                  {"separation", cfg.pipeline.cluster.separation}};
  p["generator_cadence"] = cfg.pipeline.generator_cadence;
  p["trajectory_capacity"] = cfg.pipeline.trajectory_capacity;
  p["distance_subsample"] = cfg.pipeline.distance_subsample;
  p["mle_refine"] = cfg.pipeline.mle_refine;
  p["oosm_buffer"] = cfg.pipeline.oosm_buffer;
  p["alarm"] = {{"window", cfg.pipeline.alarm.window},
                {"consecutive", cfg.pipeline.alarm.consecutive},
                {"kappa", cfg.pipeline.alarm.kappa},
                {"sigma_floor_frac", cfg.pipeline.alarm.sigma_floor_frac},
                {"ekf_level", cfg.pipeline.alarm.ekf_level}};
  p["ekf"] = {{"accel_psd", cfg.pipeline.ekf.accel_psd},
              {"meas_noise_std", to_std(cfg.pipeline.ekf.meas_noise_std)},
              {"p0_pos", cfg.pipeline.ekf.p0_pos},
              {"p0_vel", cfg.pipeline.ekf.p0_vel}};
  p["bayes"] = {{"enabled", cfg.pipeline.bayes.enabled},
                {"temper_threshold", cfg.pipeline.bayes.correction.temper_threshold},
                {"temper_scale", cfg.pipeline.bayes.correction.temper_scale},
                {"activation_quantile", cfg.pipeline.bayes.activation_quantile},
                {"activation_window", cfg.pipeline.bayes.activation_window},
                {"activation_min", cfg.pipeline.bayes.activation_min},
                {"scale_multiplier", cfg.pipeline.bayes.scale_multiplier}};
  p["info_alpha"] = cfg.pipeline.info_alpha;
  p["info_beta"] = cfg.pipeline.info_beta;
  p["feature_gate"] = cfg.pipeline.feature_gate;
  j["pipeline"] = p;

  nlohmann::ordered_json m;
  m["horizon"] = cfg.mpc.horizon;
  m["dt"] = cfg.mpc.dt;
  m["state_weight"] = to_std6(cfg.mpc.state_weight);
  m["control_weight"] = to_std(cfg.mpc.control_weight);
  m["x_ref"] = to_std6(cfg.mpc.x_ref);
  m["costate_weight"] = cfg.mpc.costate_weight;
  m["inv_mfpt_weight"] = cfg.mpc.inv_mfpt_weight;
  m["risk_max"] = cfg.mpc.risk_max;
  m["control_lo"] = to_std(cfg.mpc.control_lo);
  m["control_hi"] = to_std(cfg.mpc.control_hi);
  m["max_iters"] = cfg.mpc.max_iters;
  j["mpc"] = m;

  return j;
}

}  // namespace csfusion
