#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "csfusion/types.hpp"
#include "json.hpp"

namespace csfusion {

enum class RegimeLabel { kNominal, kCorrective, kHazard };

const char* to_string(RegimeLabel label);
RegimeLabel regime_label_from_string(const std::string& name);

/// Feature sample built from one co-state evaluation: the multiplier, its
/// Euclidean norm and the whitened innovation magnitude.
struct FeatureVector {
  Vec3 lambda{Vec3::Zero()};
  double lambda_norm = 0.0;
  double z = 0.0;
  double t = 0.0;

  Eigen::Matrix<double, 5, 1> as_vector() const {
    Eigen::Matrix<double, 5, 1> out;
    out << lambda, lambda_norm, z;
    return out;
  }
};

FeatureVector extract_features(const Vec3& lambda, double z, double t);

struct ClusterConfig {
  int k = 3;
  /// Samples before assignments are trusted and statistics freeze.
  int warmup = 600;
  /// Minimum seed separation in running-std units.
  double separation = 0.5;
  bool standardize = true;
};

/// Immutable snapshot of a fitted mode partition. Centroids are stored in
/// raw coordinates; `scale` carries the per-dimension standardization used
/// for distance queries (all ones when standardization is off).
struct ModeModel {
  int k = 0;
  Eigen::MatrixXd centroids;  // k x dim
  std::vector<std::int64_t> counts;
  std::vector<RegimeLabel> labels;
  Eigen::VectorXd scale;

  int dim() const { return static_cast<int>(centroids.cols()); }

  /// Nearest centroid in scaled coordinates; ties break toward lower index.
  int assign(const Eigen::VectorXd& x) const;

  std::vector<int> hazard_modes() const;
};

int assign_mode(const FeatureVector& phi, const ModeModel& model);

/// Tags modes by centroid geometry: the largest lambda-norm centroid becomes
/// Hazard, the smallest Nominal, the rest Corrective. Ties break toward the
/// larger z component. Requires a 5-dim feature model with k >= 2.
ModeModel label_regimes(ModeModel model);

/// Sequential k-means with count-decayed learning rate. Seeds centroids from
/// the first k sufficiently separated samples, keeps running mean/std for
/// scaling, and freezes the scaling once `warmup` samples have been seen.
/// Deterministic given the stream order.
class OnlineClusterer {
 public:
  OnlineClusterer(int dim, ClusterConfig cfg);

  void observe(const Eigen::VectorXd& x);

  bool warm() const;
  std::int64_t samples_seen() const { return n_; }
  int seeded() const { return seeded_; }

  /// Throws WarmupIncompleteError when fewer than k centroids were seeded or
  /// any mode is still empty.
  ModeModel snapshot() const;

  Eigen::VectorXd running_mean() const { return mean_; }
  Eigen::VectorXd running_std() const;

 private:
  Eigen::VectorXd scale() const;
  int nearest(const Eigen::VectorXd& x) const;

  int dim_;
  ClusterConfig cfg_;
  std::int64_t n_ = 0;
  int seeded_ = 0;
  Eigen::MatrixXd centroids_;
  std::vector<std::int64_t> counts_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
  Eigen::VectorXd frozen_scale_;
  bool frozen_ = false;
};

/// Centroids of raw co-state samples, via the same sequential routine with
/// standardization disabled. Throws WarmupIncompleteError when fewer than
/// k_prime centroids can be seeded.
Eigen::MatrixXd costate_centroids(const std::vector<Vec3>& samples, int k_prime);

nlohmann::json mode_model_to_json(const ModeModel& model);
ModeModel mode_model_from_json(const nlohmann::json& j);

}  // namespace csfusion
