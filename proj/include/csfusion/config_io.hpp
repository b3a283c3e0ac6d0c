#pragma once

#include <string>

#include "csfusion/descent_sim.hpp"
#include "csfusion/mpc.hpp"
#include "csfusion/pipeline.hpp"
#include "json.hpp"

namespace csfusion {

/// Bundle of every runtime configuration section. Missing JSON keys keep
/// their defaults; the EKF measurement noise follows the simulator noise
/// unless overridden explicitly.
struct RunConfig {
  DescentConfig descent;
  FaultConfig fault;
  PipelineConfig pipeline;
  MpcConfig mpc;
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

nlohmann::ordered_json run_config_to_json(const RunConfig& cfg);

const char* fault_kind_name(FaultConfig::Kind kind);
FaultConfig::Kind fault_kind_from_name(const std::string& name);

}  // namespace csfusion
