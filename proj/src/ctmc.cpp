#include "csfusion/ctmc.hpp"

#include <cmath>
#include <random>

#include "csfusion/errors.hpp"

namespace csfusion {

CtmcPath simulate_ctmc(const Eigen::MatrixXd& l, int start, double horizon,
                       std::uint64_t seed) {
  const long k = l.rows();
  if (start < 0 || start >= k) throw InvalidConfigError("start mode out of range");
  if (!(horizon > 0.0)) throw InvalidIntervalError("horizon must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  CtmcPath path;
  path.horizon = horizon;
  path.t.push_back(0.0);
  path.mode.push_back(start);

  double t = 0.0;
  int mode = start;
  while (true) {
    const double exit_rate = -l(mode, mode);
    if (!(exit_rate > 0.0)) break;  // absorbing
    const double dwell = -std::log(1.0 - unit(rng)) / exit_rate;
    t += dwell;
    if (t >= horizon) break;
    double u = unit(rng) * exit_rate;
    int next = mode;
    for (long j = 0; j < k; ++j) {
      if (j == mode) continue;
      u -= l(j, mode);
      if (u <= 0.0) {
        next = static_cast<int>(j);
        break;
      }
    }
    if (next == mode) {  // numerical leftovers land on the largest rate
      double best = -1.0;
      for (long j = 0; j < k; ++j) {
        if (j == mode) continue;
        if (l(j, mode) > best) {
          best = l(j, mode);
          next = static_cast<int>(j);
        }
      }
    }
    path.t.push_back(t);
    path.mode.push_back(next);
    mode = next;
  }
  return path;
}

TransitionStats path_stats(const CtmcPath& path, int k) {
  TransitionStats st;
  st.k = k;
  st.n_jumps = Eigen::MatrixXd::Zero(k, k);
  st.dwell = Eigen::VectorXd::Zero(k);
  st.transitions.assign(static_cast<std::size_t>(k),
                        std::vector<std::vector<int>>(static_cast<std::size_t>(k)));
  for (std::size_t i = 0; i < path.mode.size(); ++i) {
    const double t_end = (i + 1 < path.t.size()) ? path.t[i + 1] : path.horizon;
    st.dwell[path.mode[i]] += t_end - path.t[i];
    if (i + 1 < path.mode.size()) {
      st.n_jumps(path.mode[i + 1], path.mode[i]) += 1.0;
      st.transitions[static_cast<std::size_t>(path.mode[i])]
                    [static_cast<std::size_t>(path.mode[i + 1])]
                        .push_back(static_cast<int>(i));
    }
  }
  return st;
}

LabeledTrajectory path_to_trajectory(const CtmcPath& path, int k) {
  LabeledTrajectory traj;
  traj.k = k;
  traj.samples.reserve(path.t.size());
  for (std::size_t i = 0; i < path.t.size(); ++i) {
    LabeledSample s;
    s.t = path.t[i];
    s.x = Eigen::VectorXd::Constant(1, static_cast<double>(path.mode[i]));
    s.mode = path.mode[i];
    traj.samples.push_back(std::move(s));
  }
  return traj;
}

double mc_mfpt(const Eigen::MatrixXd& l, const std::vector<int>& hazard_set,
               int start, int n_paths, std::uint64_t seed, double* stderr_out,
               double t_max) {
  const long k = l.rows();
  if (n_paths < 1) throw InvalidConfigError("need at least one path");
  std::vector<bool> hazard(static_cast<std::size_t>(k), false);
  for (int h : hazard_set) {
    if (h < 0 || h >= k) throw InvalidConfigError("hazard mode index out of range");
    hazard[static_cast<std::size_t>(h)] = true;
  }
  if (hazard[static_cast<std::size_t>(start)]) {
    if (stderr_out) *stderr_out = 0.0;
    return 0.0;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double sum = 0.0, sum_sq = 0.0;
  for (int p = 0; p < n_paths; ++p) {
    double t = 0.0;
    int mode = start;
    while (t < t_max) {
      const double exit_rate = -l(mode, mode);
      if (!(exit_rate > 0.0)) {
        t = t_max;  // absorbing transient mode: censor at the cap
        break;
      }
      t += -std::log(1.0 - unit(rng)) / exit_rate;
      double u = unit(rng) * exit_rate;
      int next = mode;
      for (long j = 0; j < k; ++j) {
        if (j == mode) continue;
        u -= l(j, mode);
        if (u <= 0.0) {
          next = static_cast<int>(j);
          break;
        }
      }
      mode = next;
      if (hazard[static_cast<std::size_t>(mode)]) break;
    }
    const double hit = std::min(t, t_max);
    sum += hit;
    sum_sq += hit * hit;
  }
  const double n = static_cast<double>(n_paths);
  const double mean = sum / n;
  if (stderr_out) {
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    *stderr_out = std::sqrt(var / n);
  }
  return mean;
}

}  // namespace csfusion
