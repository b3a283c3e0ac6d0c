#include "csfusion/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "csfusion/errors.hpp"

namespace csfusion {

void LabeledTrajectory::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.mode < 0 || s.mode >= k)
      throw InputFormatError("trajectory mode index out of range");
    if (i > 0 && !(s.t > samples[i - 1].t))
      throw InputFormatError("trajectory timestamps must be strictly increasing");
    if (!s.x.allFinite()) throw InputFormatError("trajectory sample not finite");
  }
}

TransitionStats collect_transitions(const LabeledTrajectory& traj) {
  traj.validate();
  TransitionStats st;
  st.k = traj.k;
  st.n_jumps = Eigen::MatrixXd::Zero(traj.k, traj.k);
  st.dwell = Eigen::VectorXd::Zero(traj.k);
  st.transitions.assign(static_cast<std::size_t>(traj.k),
                        std::vector<std::vector<int>>(static_cast<std::size_t>(traj.k)));
  for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
    const int from = traj.samples[i].mode;
    const int to = traj.samples[i + 1].mode;
    const double dt = traj.samples[i + 1].t - traj.samples[i].t;
    st.dwell[from] += dt;
    if (from != to) {
      st.n_jumps(to, from) += 1.0;
      st.transitions[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)]
          .push_back(static_cast<int>(i));
    }
  }
  return st;
}

InterclusterDistances intercluster_distances(const LabeledTrajectory& traj,
                                             int subsample_cap) {
  traj.validate();
  const int k = traj.k;
  const int q = traj.dim();

  std::vector<std::vector<int>> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < traj.samples.size(); ++i)
    members[static_cast<std::size_t>(traj.samples[i].mode)].push_back(
        static_cast<int>(i));
  for (int j = 0; j < k; ++j) {
    auto& m = members[static_cast<std::size_t>(j)];
    if (m.empty())
      throw DegenerateClusterError("mode " + std::to_string(j) +
                                   " has no members");
    if (subsample_cap > 0 && static_cast<int>(m.size()) > subsample_cap)
      m.erase(m.begin(), m.end() - subsample_cap);
  }

  InterclusterDistances out;
  out.full = Eigen::MatrixXd::Zero(k, k);
  out.per_coord.assign(static_cast<std::size_t>(q), Eigen::MatrixXd::Zero(k, k));

  for (int a = 0; a < k; ++a) {
    for (int b = a; b < k; ++b) {
      const auto& ma = members[static_cast<std::size_t>(a)];
      const auto& mb = members[static_cast<std::size_t>(b)];
      double acc = 0.0;
      Eigen::VectorXd acc_q = Eigen::VectorXd::Zero(q);
      for (int i : ma) {
        for (int j : mb) {
          const Eigen::VectorXd d =
              traj.samples[static_cast<std::size_t>(i)].x -
              traj.samples[static_cast<std::size_t>(j)].x;
          acc += d.norm();
          acc_q += d.cwiseAbs();
        }
      }
      const double n = static_cast<double>(ma.size()) * static_cast<double>(mb.size());
      out.full(a, b) = out.full(b, a) = acc / n;
      for (int c = 0; c < q; ++c)
        out.per_coord[static_cast<std::size_t>(c)](a, b) =
            out.per_coord[static_cast<std::size_t>(c)](b, a) = acc_q[c] / n;
    }
  }
  return out;
}

DriftEstimate estimate_drift(const LabeledTrajectory& traj,
                             const TransitionStats& stats,
                             const InterclusterDistances& dist) {
  const int k = traj.k;
  const int q = traj.dim();
  DriftEstimate out;
  out.a_q.assign(static_cast<std::size_t>(q), Eigen::MatrixXd::Zero(k, k));
  out.a_mode_q = Eigen::MatrixXd::Zero(k, q);
  out.a_pair = Eigen::MatrixXd::Zero(k, k);

  for (int from = 0; from < k; ++from) {
    for (int to = 0; to < k; ++to) {
      if (from == to) continue;
      const auto& idx = stats.set(from, to);
      if (idx.empty()) continue;  // no transitions: rate stays 0
      for (int c = 0; c < q; ++c) {
        double acc = 0.0;
        for (int i : idx) {
          const auto& s0 = traj.samples[static_cast<std::size_t>(i)];
          const auto& s1 = traj.samples[static_cast<std::size_t>(i) + 1];
          acc += std::abs(s1.x[c] - s0.x[c]) / (s1.t - s0.t);
        }
        out.a_q[static_cast<std::size_t>(c)](from, to) =
            acc / static_cast<double>(idx.size());
      }
    }
  }

  for (int from = 0; from < k; ++from) {
    for (int c = 0; c < q; ++c) {
      double acc = 0.0;
      for (int to = 0; to < k; ++to) {
        if (to == from) continue;
        const double a = out.a_q[static_cast<std::size_t>(c)](from, to);
        if (a == 0.0) continue;
        const double l = dist.per_coord[static_cast<std::size_t>(c)](from, to);
        if (l <= 0.0) {
          out.diagnostics.push_back("zero inter-cluster distance, coordinate " +
                                    std::to_string(c) + " pair (" +
                                    std::to_string(from) + "," + std::to_string(to) +
                                    ") excluded from mode aggregate");
          continue;
        }
        acc += a / l;
      }
      out.a_mode_q(from, c) = acc;
    }
  }

  for (int from = 0; from < k; ++from) {
    for (int to = 0; to < k; ++to) {
      if (from == to) continue;
      double acc = 0.0;
      for (int c = 0; c < q; ++c) {
        const double a = out.a_q[static_cast<std::size_t>(c)](from, to);
        if (a == 0.0) continue;
        const double l = dist.per_coord[static_cast<std::size_t>(c)](from, to);
        if (l <= 0.0) {
          out.diagnostics.push_back("zero inter-cluster distance, coordinate " +
                                    std::to_string(c) + " pair (" +
                                    std::to_string(from) + "," + std::to_string(to) +
                                    ") excluded from pair rate");
          continue;
        }
        acc += a / l;
      }
      out.a_pair(from, to) = acc;
    }
  }
  return out;
}

DiffusionEstimate estimate_diffusion(const LabeledTrajectory& traj,
                                     const TransitionStats& stats,
                                     const DriftEstimate& drift,
                                     const InterclusterDistances& dist) {
  const int k = traj.k;
  const int q = traj.dim();
  DiffusionEstimate out;
  out.cov.assign(static_cast<std::size_t>(k * k), Eigen::MatrixXd::Zero(q, q));
  out.sigma_pair = Eigen::MatrixXd::Zero(k, k);

  for (int from = 0; from < k; ++from) {
    for (int to = 0; to < k; ++to) {
      if (from == to) continue;
      const auto& idx = stats.set(from, to);
      const auto n = static_cast<double>(idx.size());
      auto& cov = out.cov[static_cast<std::size_t>(from * k + to)];
      if (idx.size() <= 1) continue;  // sample covariance undefined: stays 0
      for (int i : idx) {
        const auto& s0 = traj.samples[static_cast<std::size_t>(i)];
        const auto& s1 = traj.samples[static_cast<std::size_t>(i) + 1];
        const double sdt = std::sqrt(s1.t - s0.t);
        Eigen::VectorXd dev(q);
        for (int c = 0; c < q; ++c)
          dev[c] = std::abs(s1.x[c] - s0.x[c]) / sdt -
                   drift.a_q[static_cast<std::size_t>(c)](from, to) * sdt;
        cov += dev * dev.transpose();
      }
      cov /= (n - 1.0);

      double agg = 0.0;
      bool degenerate = false;
      for (int p = 0; p < q && !degenerate; ++p) {
        for (int c = 0; c < q; ++c) {
          const double lp = dist.per_coord[static_cast<std::size_t>(p)](from, to);
          const double lc = dist.per_coord[static_cast<std::size_t>(c)](from, to);
          if (lp <= 0.0 || lc <= 0.0) {
            degenerate = true;
            break;
          }
          agg += cov(p, c) / (lp * lc);
        }
      }
      out.sigma_pair(from, to) = degenerate ? 0.0 : agg;
    }
  }
  return out;
}

Eigen::MatrixXd assemble_generator(const Eigen::MatrixXd& a_pair,
                                   const Eigen::MatrixXd& sigma_pair) {
  const long k = a_pair.rows();
  if (a_pair.cols() != k || sigma_pair.rows() != k || sigma_pair.cols() != k)
    throw InvalidConfigError("pair-rate matrices must be square and same size");

  Eigen::MatrixXd l1_out = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd l1_in = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd l2 = Eigen::MatrixXd::Zero(k, k);

  for (long kk = 0; kk < k; ++kk) {
    for (long ll = 0; ll < k; ++ll) {
      if (kk == ll) continue;
      l1_out(ll, kk) = a_pair(kk, ll);
      l1_in(ll, kk) = -a_pair(ll, kk);
      l2(ll, kk) = 0.5 * (sigma_pair(kk, ll) + sigma_pair(ll, kk));
    }
  }
  for (long kk = 0; kk < k; ++kk) {
    double out_col = 0.0, in_col = 0.0, l2_row = 0.0;
    for (long ll = 0; ll < k; ++ll) {
      if (kk == ll) continue;
      out_col += l1_out(ll, kk);
      in_col += l1_in(ll, kk);
      l2_row += l2(kk, ll);
    }
    l1_out(kk, kk) = -out_col;
    l1_in(kk, kk) = -in_col;
    l2(kk, kk) = -l2_row;  // symmetric off-diagonal: row sum equals column sum
  }
  return l1_out + l1_in + l2;
}

Eigen::MatrixXd enforce_generator_validity(const Eigen::MatrixXd& l_raw) {
  const long k = l_raw.rows();
  if (l_raw.cols() != k) throw InvalidConfigError("generator must be square");
  Eigen::MatrixXd l = l_raw;
  for (long c = 0; c < k; ++c) {
    double off = 0.0;
    for (long r = 0; r < k; ++r) {
      if (r == c) continue;
      if (l(r, c) < 0.0) l(r, c) = 0.0;
      off += l(r, c);
    }
    l(c, c) = -off;
  }
  return l;
}

bool is_valid_generator(const Eigen::MatrixXd& l, double tol) {
  const long k = l.rows();
  if (l.cols() != k) return false;
  for (long c = 0; c < k; ++c) {
    double col = 0.0;
    for (long r = 0; r < k; ++r) {
      if (r != c && l(r, c) < -tol) return false;
      col += l(r, c);
    }
    if (std::abs(col) > tol) return false;
  }
  return true;
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  const long n = a.rows();
  if (a.cols() != n) throw InvalidConfigError("matrix exponential needs a square matrix");
  if (!a.allFinite()) throw InvalidConfigError("matrix exponential needs finite entries");

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  double scale = 1.0;
  while (norm1 * scale > 0.5) {
    scale *= 0.5;
    ++squarings;
  }

  const Eigen::MatrixXd b = a * scale;
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sum = term;
  const double b_norm = b.cwiseAbs().colwise().sum().maxCoeff();
  // Truncated Taylor with a geometric-tail remainder bound: after the k-th
  // term the tail is <= ||term|| * r / (1 - r) with r = ||B|| / (k+1) < 1.
  for (int k = 1; k <= 40; ++k) {
    term = term * b / static_cast<double>(k);
    sum += term;
    const double t_norm = term.cwiseAbs().colwise().sum().maxCoeff();
    const double r = b_norm / static_cast<double>(k + 1);
    if (r < 1.0 && t_norm * r / (1.0 - r) < 1e-16 * sum.cwiseAbs().colwise().sum().maxCoeff())
      break;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

Eigen::VectorXd propagate_probabilities(const Eigen::MatrixXd& l,
                                        const Eigen::VectorXd& p, double dt) {
  if (!(dt >= 0.0)) throw InvalidIntervalError("propagation interval must be nonnegative");
  if (p.size() != l.rows()) throw InvalidConfigError("probability dimension mismatch");
  Eigen::VectorXd out = expm(l * dt) * p;
  const double s = out.sum();
  if (std::abs(s - 1.0) > 1e-12 && s > 0.0) out /= s;
  return out;
}

namespace {

std::vector<int> transient_of(long k, const std::vector<int>& hazard_set) {
  std::vector<bool> hazard(static_cast<std::size_t>(k), false);
  for (int h : hazard_set) {
    if (h < 0 || h >= k) throw InvalidConfigError("hazard mode index out of range");
    hazard[static_cast<std::size_t>(h)] = true;
  }
  std::vector<int> transient;
  for (long j = 0; j < k; ++j)
    if (!hazard[static_cast<std::size_t>(j)]) transient.push_back(static_cast<int>(j));
  return transient;
}

/// Modes that cannot reach the hazard set through positive off-diagonal rates.
std::vector<int> unreachable_modes(const Eigen::MatrixXd& l,
                                   const std::vector<int>& hazard_set) {
  const long k = l.rows();
  std::vector<bool> reaches(static_cast<std::size_t>(k), false);
  for (int h : hazard_set) reaches[static_cast<std::size_t>(h)] = true;
  bool changed = true;
  while (changed) {
    changed = false;
    for (long from = 0; from < k; ++from) {
      if (reaches[static_cast<std::size_t>(from)]) continue;
      for (long to = 0; to < k; ++to) {
        if (to == from || l(to, from) <= 0.0) continue;
        if (reaches[static_cast<std::size_t>(to)]) {
          reaches[static_cast<std::size_t>(from)] = true;
          changed = true;
          break;
        }
      }
    }
  }
  std::vector<int> out;
  for (long j = 0; j < k; ++j)
    if (!reaches[static_cast<std::size_t>(j)]) out.push_back(static_cast<int>(j));
  return out;
}

}  // namespace

double MfptResult::for_mode(int mode) const {
  for (std::size_t i = 0; i < transient_modes.size(); ++i)
    if (transient_modes[i] == mode) return hitting_time[static_cast<long>(i)];
  return 0.0;
}

MfptResult mfpt(const Eigen::MatrixXd& l, const std::vector<int>& hazard_set) {
  const long k = l.rows();
  if (hazard_set.empty()) throw InvalidConfigError("hazard set must be non-empty");
  const std::vector<int> transient = transient_of(k, hazard_set);
  if (transient.empty())
    throw InvalidConfigError("hazard set must be a proper subset of modes");

  const std::vector<int> stuck = unreachable_modes(l, hazard_set);
  if (!stuck.empty()) {
    std::string msg = "hazard set unreachable from mode(s):";
    for (int m : stuck) msg += " " + std::to_string(m);
    throw UnreachableHazardError(msg, stuck);
  }

  const long nt = static_cast<long>(transient.size());
  Eigen::MatrixXd sub(nt, nt);
  for (long i = 0; i < nt; ++i)
    for (long j = 0; j < nt; ++j)
      sub(i, j) = l(transient[static_cast<std::size_t>(i)],
                    transient[static_cast<std::size_t>(j)]);

  // Column-convention subgenerator: hitting times solve sub^T m = -1.
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sub.transpose());
  if (!lu.isInvertible())
    throw UnreachableHazardError("transient subgenerator is singular", transient);
  const Eigen::VectorXd m = lu.solve(Eigen::VectorXd::Constant(nt, -1.0));

  MfptResult out;
  out.transient_modes = transient;
  out.hitting_time = m;
  return out;
}

Eigen::MatrixXd mle_generator(const Eigen::MatrixXd& n_jumps,
                              const Eigen::VectorXd& dwell) {
  const long k = n_jumps.rows();
  if (n_jumps.cols() != k || dwell.size() != k)
    throw InvalidConfigError("jump count / dwell dimension mismatch");

  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(k, k);
  for (long from = 0; from < k; ++from) {
    double total_jumps = 0.0;
    for (long to = 0; to < k; ++to)
      if (to != from) total_jumps += n_jumps(to, from);
    if (total_jumps == 0.0) continue;
    if (!(dwell[from] > 0.0))
      throw DegenerateDwellError("mode " + std::to_string(from) +
                                 " has jumps but zero dwell time");
    for (long to = 0; to < k; ++to) {
      if (to == from) continue;
      l(to, from) = n_jumps(to, from) / dwell[from];
    }
    l(from, from) = -total_jumps / dwell[from];
  }
  return l;
}

double generator_log_likelihood(const Eigen::MatrixXd& l,
                                const Eigen::MatrixXd& n_jumps,
                                const Eigen::VectorXd& dwell) {
  const long k = l.rows();
  double ll = 0.0;
  for (long from = 0; from < k; ++from) {
    for (long to = 0; to < k; ++to) {
      if (to == from) continue;
      const double n = n_jumps(to, from);
      if (n > 0.0) {
        if (!(l(to, from) > 0.0)) return -std::numeric_limits<double>::infinity();
        ll += n * std::log(l(to, from));
      }
      ll -= l(to, from) * dwell[from];
    }
  }
  return ll;
}

double calibration_error(const Eigen::MatrixXd& l, double dt,
                         const Eigen::VectorXd& p,
                         const Eigen::VectorXd& empirical_hist) {
  if (p.size() != l.rows() || empirical_hist.size() != l.rows())
    throw InvalidConfigError("calibration dimension mismatch");
  return (expm(l * dt) * p - empirical_hist).cwiseAbs().sum();
}

namespace {

struct Segment {
  int from;
  double dwell;
  int to;  // -1: censored tail segment, dwell only
};

std::vector<Segment> extract_segments(const LabeledTrajectory& traj) {
  std::vector<Segment> segs;
  if (traj.samples.size() < 2) return segs;
  int mode = traj.samples.front().mode;
  double start = traj.samples.front().t;
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    if (traj.samples[i].mode != mode) {
      segs.push_back({mode, traj.samples[i].t - start, traj.samples[i].mode});
      mode = traj.samples[i].mode;
      start = traj.samples[i].t;
    }
  }
  if (traj.samples.back().t > start)
    segs.push_back({mode, traj.samples.back().t - start, -1});
  return segs;
}

}  // namespace

BootstrapResult bootstrap_ci(const LabeledTrajectory& traj,
                             const std::vector<int>& hazard_set, int b,
                             double confidence, std::uint64_t seed) {
  if (b < 100) throw InvalidConfigError("bootstrap needs at least 100 resamples");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw InvalidConfigError("confidence must lie in (0, 1)");
  traj.validate();
  const int k = traj.k;
  const auto segs = extract_segments(traj);
  if (segs.empty()) throw InvalidConfigError("trajectory has no transition segments");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, segs.size() - 1);

  std::vector<Eigen::MatrixXd> fits;
  fits.reserve(static_cast<std::size_t>(b));
  std::vector<Eigen::VectorXd> mfpts;
  for (int rep = 0; rep < b; ++rep) {
    Eigen::MatrixXd n = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd dwell = Eigen::VectorXd::Zero(k);
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const Segment& seg = segs[pick(rng)];
      dwell[seg.from] += seg.dwell;
      if (seg.to >= 0) n(seg.to, seg.from) += 1.0;
    }
    bool degenerate = false;
    for (int from = 0; from < k && !degenerate; ++from) {
      double jumps = 0.0;
      for (int to = 0; to < k; ++to)
        if (to != from) jumps += n(to, from);
      if (jumps > 0.0 && !(dwell[from] > 0.0)) degenerate = true;
    }
    if (degenerate) continue;
    const Eigen::MatrixXd fit = mle_generator(n, dwell);
    fits.push_back(fit);
    if (!hazard_set.empty()) {
      try {
        const MfptResult m = mfpt(fit, hazard_set);
        Eigen::VectorXd full = Eigen::VectorXd::Constant(
            k, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t i = 0; i < m.transient_modes.size(); ++i)
          full[m.transient_modes[i]] = m.hitting_time[static_cast<long>(i)];
        mfpts.push_back(full);
      } catch (const UnreachableHazardError&) {
        // resample without a hazard path: skipped for the MFPT intervals
      }
    }
  }
  if (fits.empty()) throw InvalidConfigError("all bootstrap resamples degenerate");

  const double lo_q = 0.5 * (1.0 - confidence);
  const double hi_q = 1.0 - lo_q;
  auto quantile = [](std::vector<double>& v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= v.size()) return v.back();
    return v[i] * (1.0 - frac) + v[i + 1] * frac;
  };

  BootstrapResult out;
  out.resamples_used = static_cast<int>(fits.size());
  out.mfpt_resamples_used = static_cast<int>(mfpts.size());
  out.lo = Eigen::MatrixXd::Zero(k, k);
  out.hi = Eigen::MatrixXd::Zero(k, k);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < k; ++c) {
      std::vector<double> vals;
      vals.reserve(fits.size());
      for (const auto& f : fits) vals.push_back(f(r, c));
      out.lo(r, c) = quantile(vals, lo_q);
      out.hi(r, c) = quantile(vals, hi_q);
    }
  }
  out.mfpt_lo = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
  out.mfpt_hi = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::quiet_NaN());
  if (!mfpts.empty()) {
    for (int j = 0; j < k; ++j) {
      std::vector<double> vals;
      for (const auto& m : mfpts)
        if (std::isfinite(m[j])) vals.push_back(m[j]);
      if (!vals.empty()) {
        out.mfpt_lo[j] = quantile(vals, lo_q);
        out.mfpt_hi[j] = quantile(vals, hi_q);
      }
    }
  }
  return out;
}

SpectralReport spectral_stability(const Eigen::MatrixXd& l, double tol) {
  Eigen::EigenSolver<Eigen::MatrixXd> eig(l);
  Eigen::VectorXd parts = eig.eigenvalues().real();
  std::sort(parts.data(), parts.data() + parts.size(), std::greater<double>());
  SpectralReport out;
  out.real_parts = parts;
  out.valid = parts.size() == 0 || parts[0] <= tol;
  return out;
}

Eigen::MatrixXd random_generator(int k, double min_rate, double max_rate,
                                 std::uint64_t seed) {
  if (k < 2) throw InvalidConfigError("random generator needs k >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rate(min_rate, max_rate);
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(k, k);
  for (int c = 0; c < k; ++c) {
    double off = 0.0;
    for (int r = 0; r < k; ++r) {
      if (r == c) continue;
      l(r, c) = rate(rng);
      off += l(r, c);
    }
    l(c, c) = -off;
  }
  return l;
}

}  // namespace csfusion
