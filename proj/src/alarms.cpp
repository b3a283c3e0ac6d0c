#include "csfusion/alarms.hpp"

namespace csfusion {

bool WindowedAlarm::observe(double value, double t) {
  buf_.push_back(value);
  sum_ += value;
  while (buf_.size() > static_cast<std::size_t>(window_)) {
    sum_ -= buf_.front();
    buf_.pop_front();
  }
  if (!window_full() || !has_threshold()) return false;

  if (rolling_mean() > threshold_) {
    ++streak_;
  } else {
    streak_ = 0;
  }
  if (!alarmed_ && streak_ >= consecutive_) {
    alarmed_ = true;
    alarm_time_ = t;
    return true;
  }
  return false;
}

double WindowedAlarm::rolling_mean() const {
  return buf_.empty() ? 0.0 : sum_ / static_cast<double>(buf_.size());
}

bool WindowedAlarm::exceeding() const {
  return window_full() && has_threshold() && rolling_mean() > threshold_;
}

}  // namespace csfusion
