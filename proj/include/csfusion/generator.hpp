#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csfusion/types.hpp"

namespace csfusion {

/// Mode-labeled feature trajectory with strictly increasing timestamps.
struct LabeledSample {
  double t = 0.0;
  Eigen::VectorXd x;
  int mode = 0;
};

struct LabeledTrajectory {
  int k = 0;
  std::vector<LabeledSample> samples;

  int dim() const {
    return samples.empty() ? 0 : static_cast<int>(samples.front().x.size());
  }
  void validate() const;
};

/// Jump counts, dwell times and the transition index sets T_kl.
struct TransitionStats {
  int k = 0;
  Eigen::MatrixXd n_jumps;   // (l, k): observed jumps k -> l
  Eigen::VectorXd dwell;     // seconds spent in each mode
  std::vector<std::vector<std::vector<int>>> transitions;  // [k][l] -> sample indices

  const std::vector<int>& set(int from, int to) const {
    return transitions[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
  }
};

TransitionStats collect_transitions(const LabeledTrajectory& traj);

/// Mean pairwise distances between cluster members, full-vector and
/// per-coordinate. `subsample_cap` > 0 bounds the per-cluster member count
/// used in the pair sums (most recent members kept); 0 means exact.
struct InterclusterDistances {
  Eigen::MatrixXd full;                    // l_kl
  std::vector<Eigen::MatrixXd> per_coord;  // l_kl^{(q)}
};

InterclusterDistances intercluster_distances(const LabeledTrajectory& traj,
                                             int subsample_cap = 0);

struct DriftEstimate {
  std::vector<Eigen::MatrixXd> a_q;  // per-coordinate transition intensities a_kl^{(q)}
  Eigen::MatrixXd a_mode_q;          // per-mode aggregates (k x q)
  Eigen::MatrixXd a_pair;            // scalar pair rates feeding the generator
  std::vector<std::string> diagnostics;
};

DriftEstimate estimate_drift(const LabeledTrajectory& traj,
                             const TransitionStats& stats,
                             const InterclusterDistances& dist);

struct DiffusionEstimate {
  std::vector<Eigen::MatrixXd> cov;  // index k*K+l: per-pair coordinate covariance
  Eigen::MatrixXd sigma_pair;        // aggregated pair diffusion
};

DiffusionEstimate estimate_diffusion(const LabeledTrajectory& traj,
                                     const TransitionStats& stats,
                                     const DriftEstimate& drift,
                                     const InterclusterDistances& dist);

/// Raw moment-based generator L1_out + L1_in + L2. Columns sum to zero by
/// construction; off-diagonal entries may still be negative.
Eigen::MatrixXd assemble_generator(const Eigen::MatrixXd& a_pair,
                                   const Eigen::MatrixXd& sigma_pair);

/// Clips negative off-diagonals and resets the diagonal of each column so it
/// sums to zero. Idempotent on already-valid generators.
Eigen::MatrixXd enforce_generator_validity(const Eigen::MatrixXd& l_raw);

bool is_valid_generator(const Eigen::MatrixXd& l, double tol = 1e-9);

/// Matrix exponential by scaling-and-squaring with a truncated Taylor core;
/// the squaring count keeps the scaled 1-norm at or below 0.5.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

/// p' = expm(L*dt) p, renormalized when accumulated drift exceeds 1e-12.
Eigen::VectorXd propagate_probabilities(const Eigen::MatrixXd& l,
                                        const Eigen::VectorXd& p, double dt);

struct MfptResult {
  std::vector<int> transient_modes;
  Eigen::VectorXd hitting_time;  // aligned with transient_modes

  /// Hitting time for an original mode index; hazard modes return 0.
  double for_mode(int mode) const;
};

/// Mean first-passage time into the hazard set from each transient mode,
/// solved from the transient subgenerator. Throws UnreachableHazardError when
/// the hazard set cannot be reached from some transient mode.
MfptResult mfpt(const Eigen::MatrixXd& l, const std::vector<int>& hazard_set);

/// Maximum-likelihood generator from jump counts and dwell times; rate k->l
/// is N_kl / T_k. Throws DegenerateDwellError when a mode has jumps but zero
/// dwell.
Eigen::MatrixXd mle_generator(const Eigen::MatrixXd& n_jumps,
                              const Eigen::VectorXd& dwell);

double generator_log_likelihood(const Eigen::MatrixXd& l,
                                const Eigen::MatrixXd& n_jumps,
                                const Eigen::VectorXd& dwell);

/// One-step prediction error ||expm(L*dt) p - empirical||_1.
double calibration_error(const Eigen::MatrixXd& l, double dt,
                         const Eigen::VectorXd& p,
                         const Eigen::VectorXd& empirical_hist);

struct BootstrapResult {
  Eigen::MatrixXd lo, hi;            // per-entry generator intervals
  Eigen::VectorXd mfpt_lo, mfpt_hi;  // per-mode intervals, NaN on hazard modes
  int resamples_used = 0;
  int mfpt_resamples_used = 0;
};

/// Percentile intervals from block-resampled transition segments, re-fitted
/// through the likelihood path. Requires B >= 100.
BootstrapResult bootstrap_ci(const LabeledTrajectory& traj,
                             const std::vector<int>& hazard_set, int b,
                             double confidence, std::uint64_t seed);

struct SpectralReport {
  Eigen::VectorXd real_parts;  // descending
  bool valid = true;           // max real part within tolerance of zero
};

SpectralReport spectral_stability(const Eigen::MatrixXd& l, double tol = 1e-9);

/// Random valid generator with off-diagonal rates uniform in
/// [min_rate, max_rate]; useful for randomized checks.
Eigen::MatrixXd random_generator(int k, double min_rate, double max_rate,
                                 std::uint64_t seed);

}  // namespace csfusion
