#include "csfusion/regimes.hpp"

#include <cmath>
#include <limits>

#include "csfusion/errors.hpp"

namespace csfusion {

const char* to_string(RegimeLabel label) {
  switch (label) {
    case RegimeLabel::kNominal:
      return "Nominal";
    case RegimeLabel::kCorrective:
      return "Corrective";
    case RegimeLabel::kHazard:
      return "Hazard";
  }
  return "Unknown";
}

RegimeLabel regime_label_from_string(const std::string& name) {
  if (name == "Nominal") return RegimeLabel::kNominal;
  if (name == "Corrective") return RegimeLabel::kCorrective;
  if (name == "Hazard") return RegimeLabel::kHazard;
  throw InvalidConfigError("unknown regime label: " + name);
}

FeatureVector extract_features(const Vec3& lambda, double z, double t) {
  if (!lambda.allFinite() || !std::isfinite(z) || !std::isfinite(t))
    throw InvalidStateError("feature inputs must be finite");
  return {lambda, lambda.norm(), z, t};
}

namespace {

int nearest_scaled(const Eigen::MatrixXd& centroids, int k,
                   const Eigen::VectorXd& x, const Eigen::VectorXd& scale) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int j = 0; j < k; ++j) {
    const double d =
        ((x - centroids.row(j).transpose()).cwiseQuotient(scale)).squaredNorm();
    if (d < best_d) {  // strict: ties stay with the lower index
      best_d = d;
      best = j;
    }
  }
  return best;
}

}  // namespace

int ModeModel::assign(const Eigen::VectorXd& x) const {
  if (k <= 0) throw WarmupIncompleteError("mode model is empty");
  return nearest_scaled(centroids, k, x, scale);
}

std::vector<int> ModeModel::hazard_modes() const {
  std::vector<int> out;
  for (int j = 0; j < k; ++j)
    if (j < static_cast<int>(labels.size()) && labels[j] == RegimeLabel::kHazard)
      out.push_back(j);
  return out;
}

int assign_mode(const FeatureVector& phi, const ModeModel& model) {
  return model.assign(phi.as_vector());
}

ModeModel label_regimes(ModeModel model) {
  if (model.k < 2) throw InvalidConfigError("labeling requires at least two modes");
  if (model.dim() < 5) throw InvalidConfigError("labeling requires feature-space centroids");

  constexpr int kNormIdx = 3;
  constexpr int kZIdx = 4;
  auto better = [&](int a, int b) {
    // true when a ranks above b (larger norm, then larger z, then lower index)
    const double da = model.centroids(a, kNormIdx), db = model.centroids(b, kNormIdx);
    if (da != db) return da > db;
    const double za = model.centroids(a, kZIdx), zb = model.centroids(b, kZIdx);
    if (za != zb) return za > zb;
    return a < b;
  };

  int hazard = 0, nominal = 0;
  for (int j = 1; j < model.k; ++j) {
    if (better(j, hazard)) hazard = j;
    if (better(nominal, j)) nominal = j;
  }
  model.labels.assign(model.k, RegimeLabel::kCorrective);
  model.labels[nominal] = RegimeLabel::kNominal;
  model.labels[hazard] = RegimeLabel::kHazard;
  return model;
}

OnlineClusterer::OnlineClusterer(int dim, ClusterConfig cfg)
    : dim_(dim),
      cfg_(cfg),
      centroids_(Eigen::MatrixXd::Zero(cfg.k, dim)),
      counts_(static_cast<std::size_t>(cfg.k), 0),
      mean_(Eigen::VectorXd::Zero(dim)),
      m2_(Eigen::VectorXd::Zero(dim)),
      frozen_scale_(Eigen::VectorXd::Ones(dim)) {
  if (cfg.k < 1) throw InvalidConfigError("cluster count must be >= 1");
}

Eigen::VectorXd OnlineClusterer::running_std() const {
  if (n_ < 2) return Eigen::VectorXd::Ones(dim_);
  return (m2_ / static_cast<double>(n_ - 1)).cwiseSqrt();
}

Eigen::VectorXd OnlineClusterer::scale() const {
  if (!cfg_.standardize) return Eigen::VectorXd::Ones(dim_);
  if (frozen_) return frozen_scale_;
  return running_std().cwiseMax(1e-12);
}

int OnlineClusterer::nearest(const Eigen::VectorXd& x) const {
  return nearest_scaled(centroids_, seeded_, x, scale());
}

void OnlineClusterer::observe(const Eigen::VectorXd& x) {
  if (x.size() != dim_) throw InvalidConfigError("feature dimension mismatch");
  if (!x.allFinite()) throw InvalidStateError("cluster sample must be finite");

  if (!frozen_) {
    // Welford running moments; frozen at warm-up so mode geometry stays put.
    ++n_;
    const Eigen::VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta.cwiseProduct(x - mean_);
    if (n_ >= cfg_.warmup) {
      frozen_scale_ = running_std().cwiseMax(1e-12);
      frozen_ = true;
    }
  } else {
    ++n_;
  }

  if (seeded_ < cfg_.k) {
    bool separated = true;
    // Seed separation is always judged in running-std units, even when
    // assignment distances are raw.
    const Eigen::VectorXd s =
        cfg_.standardize ? scale() : running_std().cwiseMax(1e-12);
    for (int j = 0; j < seeded_; ++j) {
      const double d =
          ((x - centroids_.row(j).transpose()).cwiseQuotient(s)).norm();
      if (d < cfg_.separation) {
        separated = false;
        break;
      }
    }
    if (separated || seeded_ == 0) {
      centroids_.row(seeded_) = x.transpose();
      counts_[static_cast<std::size_t>(seeded_)] = 1;
      ++seeded_;
      return;
    }
  }

  const int j = nearest(x);
  auto& c = counts_[static_cast<std::size_t>(j)];
  ++c;
  centroids_.row(j) +=
      (x.transpose() - centroids_.row(j)) / static_cast<double>(c);
}

bool OnlineClusterer::warm() const {
  if (seeded_ < cfg_.k || n_ < cfg_.warmup) return false;
  for (int j = 0; j < cfg_.k; ++j)
    if (counts_[static_cast<std::size_t>(j)] < 1) return false;
  return true;
}

ModeModel OnlineClusterer::snapshot() const {
  if (!warm())
    throw WarmupIncompleteError("clustering warm-up incomplete: need " +
                                std::to_string(cfg_.k) + " populated modes, have " +
                                std::to_string(seeded_));
  ModeModel m;
  m.k = cfg_.k;
  m.centroids = centroids_;
  m.counts = counts_;
  m.scale = cfg_.standardize ? frozen_scale_ : Eigen::VectorXd::Ones(dim_);
  return m;
}

Eigen::MatrixXd costate_centroids(const std::vector<Vec3>& samples, int k_prime) {
  if (k_prime < 1) throw InvalidConfigError("centroid count must be >= 1");
  if (static_cast<int>(samples.size()) < k_prime)
    throw WarmupIncompleteError("fewer co-state samples than requested centroids");

  ClusterConfig cfg;
  cfg.k = k_prime;
  cfg.warmup = static_cast<int>(samples.size());
  cfg.standardize = false;
  OnlineClusterer clusterer(3, cfg);
  for (const auto& s : samples) clusterer.observe(s);
  if (clusterer.seeded() < k_prime)
    throw WarmupIncompleteError("co-state samples not separated enough for " +
                                std::to_string(k_prime) + " centroids");
  return clusterer.snapshot().centroids;
}

nlohmann::json mode_model_to_json(const ModeModel& model) {
  nlohmann::json j;
  j["k"] = model.k;
  j["centroids"] = nlohmann::json::array();
  for (int r = 0; r < model.k; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < model.dim(); ++c) row.push_back(model.centroids(r, c));
    j["centroids"].push_back(row);
  }
  j["counts"] = model.counts;
  j["labels"] = nlohmann::json::array();
  for (auto l : model.labels) j["labels"].push_back(to_string(l));
  j["scale"] = std::vector<double>(model.scale.data(),
                                   model.scale.data() + model.scale.size());
  return j;
}

ModeModel mode_model_from_json(const nlohmann::json& j) {
  ModeModel m;
  m.k = j.at("k").get<int>();
  const auto& rows = j.at("centroids");
  const int dim = rows.empty() ? 0 : static_cast<int>(rows.front().size());
  m.centroids = Eigen::MatrixXd::Zero(m.k, dim);
  for (int r = 0; r < m.k; ++r)
    for (int c = 0; c < dim; ++c) m.centroids(r, c) = rows.at(r).at(c).get<double>();
  m.counts = j.at("counts").get<std::vector<std::int64_t>>();
  for (const auto& name : j.at("labels"))
    m.labels.push_back(regime_label_from_string(name.get<std::string>()));
  const auto scale = j.at("scale").get<std::vector<double>>();
  m.scale = Eigen::Map<const Eigen::VectorXd>(scale.data(),
                                              static_cast<long>(scale.size()));
  return m;
}

}  // namespace csfusion
