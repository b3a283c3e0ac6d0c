#include "csfusion/io.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "csfusion/errors.hpp"

namespace csfusion {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_telemetry_csv(const std::string& path,
                         const std::vector<TelemetrySample>& samples,
                         bool emit_truth) {
  std::ofstream out(path);
  if (!out) throw InputFormatError("cannot open " + path + " for writing");
  out << "t,arrival_t,y_alt,y_range,y_vz";
  if (emit_truth) out << ",truth_x,truth_y,truth_z,truth_vx,truth_vy,truth_vz";
  out << "\n";
  for (const auto& s : samples) {
    out << format_double(s.t) << ',' << format_double(s.arrival_t) << ','
        << format_double(s.y.altitude) << ',' << format_double(s.y.range) << ','
        << format_double(s.y.vertical_velocity);
    if (emit_truth) {
      const Vec6 x = s.truth.vec();
      for (int i = 0; i < 6; ++i) out << ',' << format_double(x[i]);
    }
    out << "\n";
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_field(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputFormatError("line " + std::to_string(line_no) +
                           ": non-numeric field '" + s + "'");
  }
}

}  // namespace

std::vector<TelemetrySample> ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputFormatError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw InputFormatError("empty telemetry file");

  const std::vector<std::string> header = split_csv(line);
  const std::vector<std::string> base = {"t", "arrival_t", "y_alt", "y_range", "y_vz"};
  const std::vector<std::string> truth_cols = {"truth_x",  "truth_y",  "truth_z",
                                               "truth_vx", "truth_vy", "truth_vz"};
  bool has_truth = false;
  if (header.size() == base.size() + truth_cols.size()) {
    has_truth = true;
  } else if (header.size() != base.size()) {
    throw InputFormatError("unexpected column count in header");
  }
  for (std::size_t i = 0; i < base.size(); ++i)
    if (header[i] != base[i])
      throw InputFormatError("missing column '" + base[i] + "' in header");
  if (has_truth)
    for (std::size_t i = 0; i < truth_cols.size(); ++i)
      if (header[base.size() + i] != truth_cols[i])
        throw InputFormatError("missing column '" + truth_cols[i] + "' in header");

  std::vector<TelemetrySample> samples;
  std::size_t line_no = 1;
  double last_arrival = -std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != header.size())
      throw InputFormatError("line " + std::to_string(line_no) +
                             ": expected " + std::to_string(header.size()) +
                             " fields, got " + std::to_string(fields.size()));
    TelemetrySample s;
    s.t = parse_field(fields[0], line_no);
    s.arrival_t = parse_field(fields[1], line_no);
    s.y.altitude = parse_field(fields[2], line_no);
    s.y.range = parse_field(fields[3], line_no);
    s.y.vertical_velocity = parse_field(fields[4], line_no);
    s.has_truth = has_truth;
    if (has_truth) {
      Vec6 x;
      for (int i = 0; i < 6; ++i) x[i] = parse_field(fields[5 + i], line_no);
      s.truth = StateVector::from_vec(x);
    }
    if (s.arrival_t < last_arrival)
      throw InputFormatError("line " + std::to_string(line_no) +
                             ": arrival times must be non-decreasing");
    last_arrival = s.arrival_t;
    samples.push_back(s);
  }
  return samples;
}

void write_signals_csv(const std::string& path, const RiskReport& report) {
  std::ofstream out(path);
  if (!out) throw InputFormatError("cannot open " + path + " for writing");
  const long k = report.rows.empty() ? 0 : report.rows.front().p.size();
  out << "t,lambda_norm,z,mode";
  for (long j = 0; j < k; ++j) out << ",p_" << j;
  out << ",hazard_prob,mfpt,lyapunov_v,ekf_nis,costate_alarm,ekf_alarm,corrected\n";
  for (const auto& row : report.rows) {
    out << format_double(row.t) << ',' << format_double(row.lambda_norm) << ','
        << format_double(row.z) << ',' << row.mode;
    for (long j = 0; j < k; ++j) out << ',' << format_double(row.p[j]);
    out << ',' << format_double(row.hazard_prob) << ',' << format_double(row.mfpt)
        << ',' << format_double(row.lyapunov) << ',' << format_double(row.ekf_nis)
        << ',' << (row.costate_alarm ? 1 : 0) << ',' << (row.ekf_alarm ? 1 : 0)
        << ',' << (row.corrected ? 1 : 0) << "\n";
  }
}

nlohmann::ordered_json summary_to_json(const RiskReport& report,
                                       const nlohmann::ordered_json& config_echo) {
  nlohmann::ordered_json j;
  const auto& s = report.summary;
  j["first_costate_alarm_t"] =
      s.first_costate_alarm_t ? nlohmann::ordered_json(*s.first_costate_alarm_t)
                              : nlohmann::ordered_json(nullptr);
  j["first_ekf_alarm_t"] = s.first_ekf_alarm_t
                               ? nlohmann::ordered_json(*s.first_ekf_alarm_t)
                               : nlohmann::ordered_json(nullptr);
  j["peak_hazard_prob"] = s.peak_hazard_prob;
  j["mean_calibration_error"] = s.mean_calibration_error;
  j["touchdown_t"] = s.touchdown_t;
  j["config_echo"] = config_echo;
  j["diagnostics"] = {{"dropped_late", s.dropped_late},
                      {"skipped_nonfinite", s.skipped_nonfinite},
                      {"windows_observed", s.windows_observed},
                      {"costate_windows_exceeding", s.costate_windows_exceeding},
                      {"ekf_windows_exceeding", s.ekf_windows_exceeding}};
  return j;
}

void write_summary_json(const std::string& path, const RiskReport& report,
                        const nlohmann::ordered_json& config_echo) {
  std::ofstream out(path);
  if (!out) throw InputFormatError("cannot open " + path + " for writing");
  out << summary_to_json(report, config_echo).dump(2) << "\n";
}

}  // namespace csfusion
