#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>

namespace csfusion {

/// Rolling-mean threshold detector. The trailing-window mean is evaluated at
/// every sample once the window is full; the alarm latches after
/// `consecutive` exceedances in a row.
class WindowedAlarm {
 public:
  WindowedAlarm() = default;
  WindowedAlarm(int window, int consecutive)
      : window_(window), consecutive_(consecutive) {}

  void set_threshold(double threshold) { threshold_ = threshold; }
  double threshold() const { return threshold_; }
  bool has_threshold() const { return std::isfinite(threshold_); }

  /// Feeds one value; returns true on the evaluation that latches the alarm.
  bool observe(double value, double t);

  bool alarmed() const { return alarmed_; }
  double alarm_time() const { return alarm_time_; }
  bool window_full() const { return buf_.size() >= static_cast<std::size_t>(window_); }
  double rolling_mean() const;
  /// Whether the current rolling mean exceeds the threshold (window full).
  bool exceeding() const;

 private:
  int window_ = 20;
  int consecutive_ = 3;
  double threshold_ = std::numeric_limits<double>::quiet_NaN();
  std::deque<double> buf_;
  double sum_ = 0.0;
  int streak_ = 0;
  bool alarmed_ = false;
  double alarm_time_ = std::numeric_limits<double>::quiet_NaN();
};

/// Accumulates the rolling-mean statistic of a nominal stretch and freezes a
/// mu + kappa*sigma threshold. A relative sigma floor guards against
/// under-dispersed warm-up estimates.
class FrozenNominalStats {
 public:
  void push(double rolling_mean_value) {
    ++n_;
    const double delta = rolling_mean_value - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (rolling_mean_value - mean_);
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double stddev() const {
    return n_ < 2 ? 0.0 : std::sqrt(m2_ / static_cast<double>(n_ - 1));
  }
  double threshold(double kappa, double sigma_floor_frac) const {
    const double sigma = std::max(stddev(), sigma_floor_frac * std::abs(mean_));
    return mean_ + kappa * sigma;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace csfusion
