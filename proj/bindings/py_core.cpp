#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "csfusion/bayes_correction.hpp"
#include "csfusion/config_io.hpp"
#include "csfusion/costate.hpp"
#include "csfusion/ctmc.hpp"
#include "csfusion/descent_sim.hpp"
#include "csfusion/errors.hpp"
#include "csfusion/experiments.hpp"
#include "csfusion/generator.hpp"
#include "csfusion/io.hpp"
#include "csfusion/measurement_model.hpp"
#include "csfusion/mpc.hpp"
#include "csfusion/pipeline.hpp"
#include "csfusion/stats.hpp"

namespace py = pybind11;
using namespace csfusion;

namespace {

StateVector state_from(const Vec6& x) { return StateVector::from_vec(x); }

RunConfig config_from_json_str(const std::string& text) {
  if (text.empty()) return RunConfig{};
  return run_config_from_json(nlohmann::json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Co-state data fusion: geometric consistency monitoring, regime "
            "generator learning and risk forecasting for descent telemetry";

  py::register_exception<Error>(m, "FusionError");

  // Measurement model
  m.def("eval_dynamics",
        [](const Vec6& x) { return eval_dynamics(state_from(x)).vec(); },
        py::arg("state"), "Constant-velocity prior derivative (v, 0)");
  m.def("eval_h", [](const Vec6& x) { return eval_h(state_from(x)).vec(); },
        py::arg("state"), "Altitude / slant-range / vertical-rate measurement map");
  m.def("eval_jacobian",
        [](const Vec6& x) -> Eigen::MatrixXd { return eval_jacobian(state_from(x)); },
        py::arg("state"));
  m.def("predicted_increment",
        [](const Vec6& x) -> Vec3 { return predicted_increment(state_from(x)); },
        py::arg("state"), "Model-predicted measurement rate");

  // Co-state operations
  m.def("regularized_gram_inverse",
        [](const Eigen::MatrixXd& h, double eps) -> Eigen::MatrixXd {
          return regularized_gram_inverse(Mat36(h), eps);
        },
        py::arg("jacobian"), py::arg("eps"));
  m.def("compute_costate",
        [](const Eigen::MatrixXd& h, const Vec3& sigma_sq, const Vec3& dy,
           const Vec3& eta, double dt, double eps) -> Vec3 {
          return compute_costate(Mat36(h), sigma_sq, dy, eta, dt, eps);
        },
        py::arg("jacobian"), py::arg("sigma_sq"), py::arg("dy_obs"),
        py::arg("eta"), py::arg("dt"), py::arg("eps"));
  m.def("whitened_innovation",
        [](const Vec3& dy, const Vec3& eta, double dt, const Vec3& sigma_sq) {
          return whitened_innovation(dy, eta, dt, sigma_sq);
        },
        py::arg("dy_obs"), py::arg("eta"), py::arg("dt"), py::arg("sigma_sq"));
  m.def("project_state_update",
        [](const Vec6& x, const Vec3& lambda, const Eigen::MatrixXd& h, double dt) {
          return project_state_update(state_from(x), lambda, Mat36(h), dt).vec();
        },
        py::arg("state"), py::arg("lambda_"), py::arg("jacobian"), py::arg("dt"));
  m.def("lyapunov_value",
        [](const Vec6& dx, const Vec6& f_dt, const Eigen::MatrixXd& h, double eps) {
          return lyapunov_value(dx, f_dt, Mat36(h), eps);
        },
        py::arg("dx"), py::arg("f_dt"), py::arg("jacobian"), py::arg("eps"));

  // Generator / CTMC layer
  m.def("expm", &expm, py::arg("a"), "Scaling-and-squaring matrix exponential");
  m.def("enforce_generator_validity", &enforce_generator_validity, py::arg("l_raw"));
  m.def("is_valid_generator", &is_valid_generator, py::arg("l"),
        py::arg("tol") = 1e-9);
  m.def("propagate_probabilities", &propagate_probabilities, py::arg("l"),
        py::arg("p"), py::arg("dt"));
  m.def("mfpt",
        [](const Eigen::MatrixXd& l, const std::vector<int>& hazard) {
          const MfptResult r = mfpt(l, hazard);
          return py::make_tuple(r.transient_modes, r.hitting_time);
        },
        py::arg("l"), py::arg("hazard_set"),
        "Returns (transient mode indices, hitting times)");
  m.def("mle_generator", &mle_generator, py::arg("n_jumps"), py::arg("dwell"));
  m.def("random_generator", &random_generator, py::arg("k"), py::arg("min_rate"),
        py::arg("max_rate"), py::arg("seed"));
  m.def("spectral_real_parts",
        [](const Eigen::MatrixXd& l) { return spectral_stability(l).real_parts; },
        py::arg("l"));
  m.def("mc_mfpt",
        [](const Eigen::MatrixXd& l, const std::vector<int>& hazard, int start,
           int n_paths, std::uint64_t seed) {
          double se = 0.0;
          const double mean = mc_mfpt(l, hazard, start, n_paths, seed, &se);
          return py::make_tuple(mean, se);
        },
        py::arg("l"), py::arg("hazard_set"), py::arg("start"),
        py::arg("n_paths"), py::arg("seed"));

  // Probability correction
  m.def("correct_probabilities",
        [](const Eigen::VectorXd& p, const Eigen::MatrixXd& centroids,
           const Eigen::VectorXd& dlam, double dt, double temper_threshold,
           double temper_scale) {
          CorrectionConfig cfg;
          cfg.temper_threshold = temper_threshold;
          cfg.temper_scale = temper_scale;
          return correct_probabilities(p, centroids, dlam, dt, cfg);
        },
        py::arg("p"), py::arg("centroids"), py::arg("delta_lambda"),
        py::arg("dt"), py::arg("temper_threshold") = 30.0,
        py::arg("temper_scale") = 0.5);

  m.def("chi2_3_quantile", &chi2_3_quantile, py::arg("prob"));
  m.attr("CHI3_MEAN") = kChi3Mean;

  // Simulator + pipeline, exchanged through plain arrays and JSON strings.
  m.def("simulate_descent",
        [](const std::string& config_json, std::uint64_t seed, bool with_fault) {
          RunConfig cfg = config_from_json_str(config_json);
          cfg.descent.seed = seed;
          const DescentResult sim =
              simulate_descent(cfg.descent, effective_fault(cfg.fault, with_fault));
          const std::size_t n = sim.samples.size();
          Eigen::MatrixXd data(n, 11);
          for (std::size_t i = 0; i < n; ++i) {
            const auto& s = sim.samples[i];
            data(i, 0) = s.t;
            data(i, 1) = s.arrival_t;
            data(i, 2) = s.y.altitude;
            data(i, 3) = s.y.range;
            data(i, 4) = s.y.vertical_velocity;
            data.row(i).segment<6>(5) = s.truth.vec().transpose();
          }
          py::dict out;
          out["data"] = data;
          out["columns"] =
              std::vector<std::string>{"t", "arrival_t", "y_alt", "y_range", "y_vz",
                                       "truth_x", "truth_y", "truth_z", "truth_vx",
                                       "truth_vy", "truth_vz"};
          out["touchdown_t"] = sim.touchdown_t;
          out["touchdown_speed"] = sim.touchdown_speed;
          return out;
        },
        py::arg("config_json") = std::string(), py::arg("seed") = 0,
        py::arg("with_fault") = false);

  m.def("run_monitor",
        [](const std::string& config_json, std::uint64_t seed, bool with_fault) {
          const RunConfig cfg = config_from_json_str(config_json);
          const RiskReport report = simulate_and_monitor(cfg, seed, with_fault);
          const std::size_t n = report.rows.size();
          const long k = n == 0 ? 0 : report.rows.front().p.size();
          Eigen::MatrixXd data(n, 9 + k);
          for (std::size_t i = 0; i < n; ++i) {
            const auto& r = report.rows[i];
            data(i, 0) = r.t;
            data(i, 1) = r.lambda_norm;
            data(i, 2) = r.z;
            data(i, 3) = static_cast<double>(r.mode);
            for (long j = 0; j < k; ++j) data(i, 4 + j) = r.p[j];
            data(i, 4 + k) = r.hazard_prob;
            data(i, 5 + k) = r.mfpt;
            data(i, 6 + k) = r.lyapunov;
            data(i, 7 + k) = r.ekf_nis;
            data(i, 8 + k) = (r.costate_alarm ? 1.0 : 0.0) +
                             (r.ekf_alarm ? 2.0 : 0.0);
          }
          py::dict out;
          out["data"] = data;
          out["k"] = k;
          out["first_costate_alarm_t"] =
              report.summary.first_costate_alarm_t
                  ? py::cast(*report.summary.first_costate_alarm_t)
                  : py::none();
          out["first_ekf_alarm_t"] = report.summary.first_ekf_alarm_t
                                         ? py::cast(*report.summary.first_ekf_alarm_t)
                                         : py::none();
          out["peak_hazard_prob"] = report.summary.peak_hazard_prob;
          out["mean_calibration_error"] = report.summary.mean_calibration_error;
          out["touchdown_t"] = report.summary.touchdown_t;
          return out;
        },
        py::arg("config_json") = std::string(), py::arg("seed") = 0,
        py::arg("with_fault") = false);

  m.def("solve_mpc",
        [](const Vec6& x, const Eigen::VectorXd& p, const Eigen::MatrixXd& l,
           const Vec3& lambda_forecast, const std::string& config_json) {
          RunConfig cfg = config_from_json_str(config_json);
          if (cfg.mpc.hazard_modes.empty() && p.size() > 1)
            cfg.mpc.hazard_modes = {static_cast<int>(p.size()) - 1};
          const MpcSolution sol =
              solve_mpc(state_from(x), p, l, lambda_forecast, cfg.mpc);
          py::dict out;
          out["controls"] = Eigen::MatrixXd(sol.controls);
          out["cost"] = sol.cost;
          out["infeasible_fallback"] = sol.infeasible_fallback;
          return out;
        },
        py::arg("state"), py::arg("p"), py::arg("l"), py::arg("lambda_forecast"),
        py::arg("config_json") = std::string());

  m.def("default_config_json",
        [] { return run_config_to_json(RunConfig{}).dump(2); });
}
