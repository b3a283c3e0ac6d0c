#pragma once

#include <cstdint>
#include <vector>

#include "csfusion/generator.hpp"

namespace csfusion {

/// Jump-chain realization of a continuous-time Markov chain.
struct CtmcPath {
  std::vector<double> t;     // entry times, t[0] = 0
  std::vector<int> mode;     // mode entered at t[i]
  double horizon = 0.0;
};

/// Simulates a column-convention generator from `start` until `horizon`.
CtmcPath simulate_ctmc(const Eigen::MatrixXd& l, int start, double horizon,
                       std::uint64_t seed);

/// Jump counts and dwell times accumulated from a path (censored tail dwell
/// included).
TransitionStats path_stats(const CtmcPath& path, int k);

/// Converts a path to a sampled labeled trajectory: one sample per jump epoch
/// with the mode index embedded as a 1-dim coordinate.
LabeledTrajectory path_to_trajectory(const CtmcPath& path, int k);

/// Monte Carlo mean first-passage time into `hazard_set` from `start`.
/// Returns the sample mean; `stderr_out`, when given, receives the standard
/// error. Paths that have not hit by `t_max` are truncated there.
double mc_mfpt(const Eigen::MatrixXd& l, const std::vector<int>& hazard_set,
               int start, int n_paths, std::uint64_t seed,
               double* stderr_out = nullptr, double t_max = 1e6);

}  // namespace csfusion
