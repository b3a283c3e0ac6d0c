#pragma once

#include <string>
#include <vector>

#include "csfusion/descent_sim.hpp"
#include "csfusion/pipeline.hpp"
#include "json.hpp"

namespace csfusion {

/// Schema: t,arrival_t,y_alt,y_range,y_vz[,truth_x..truth_vz].
void write_telemetry_csv(const std::string& path,
                         const std::vector<TelemetrySample>& samples,
                         bool emit_truth);

/// Parses and validates a telemetry file. Malformed rows raise
/// InputFormatError with the line number; non-monotone arrival times are
/// rejected here, non-finite measurement values are passed through for the
/// pipeline's skip-with-diagnostic policy.
std::vector<TelemetrySample> ingest_csv(const std::string& path);

void write_signals_csv(const std::string& path, const RiskReport& report);

nlohmann::ordered_json summary_to_json(const RiskReport& report,
                                       const nlohmann::ordered_json& config_echo);
void write_summary_json(const std::string& path, const RiskReport& report,
                        const nlohmann::ordered_json& config_echo);

std::string format_double(double v);

}  // namespace csfusion
