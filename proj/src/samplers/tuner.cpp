#include <cmath>
#include <istream>
#include <ostream>

#include "eitmc/errors.hpp"
#include "eitmc/io.hpp"
#include "eitmc/samplers.hpp"

namespace eitmc {

ScaleTuner::ScaleTuner(double initial_scale, double target_rate, std::size_t window, double gain)
    : log_scale_(std::log(initial_scale)), target_(target_rate), window_(window), gain_(gain) {
  if (!(initial_scale > 0.0)) throw ConfigError("initial scale must be positive");
  if (!(target_rate > 0.0 && target_rate < 1.0)) throw ConfigError("target acceptance rate must lie in (0, 1)");
  if (window == 0) throw ConfigError("tuning window must be positive");
}

double ScaleTuner::scale() const { return std::exp(log_scale_); }

void ScaleTuner::observe(std::uint64_t proposed, std::uint64_t accepted) {
  if (!active_) return;
  proposed_ += proposed;
  accepted_ += accepted;
  if (proposed_ < window_) return;
  last_rate_ = static_cast<double>(accepted_) / static_cast<double>(proposed_);
  ++windows_;
  log_scale_ += gain_ / std::sqrt(static_cast<double>(windows_)) * (last_rate_ - target_);
  proposed_ = accepted_ = 0;
}

std::ostream& operator<<(std::ostream& os, const ScaleTuner& t) {
  return os << io::format_double(t.log_scale_) << ' ' << io::format_double(t.target_) << ' ' << t.window_ << ' '
            << io::format_double(t.gain_) << ' ' << (t.active_ ? 1 : 0) << ' ' << t.windows_ << ' ' << t.proposed_
            << ' ' << t.accepted_ << ' ' << io::format_double(t.last_rate_);
}

std::istream& operator>>(std::istream& is, ScaleTuner& t) {
  std::string ls, tg, gn, lr;
  int active = 0;
  is >> ls >> tg >> t.window_ >> gn >> active >> t.windows_ >> t.proposed_ >> t.accepted_ >> lr;
  if (!is) return is;
  t.log_scale_ = io::parse_double(ls, "tuner");
  t.target_ = io::parse_double(tg, "tuner");
  t.gain_ = io::parse_double(gn, "tuner");
  t.last_rate_ = io::parse_double(lr, "tuner");
  t.active_ = active != 0;
  return is;
}

double tune_scale(const std::function<bool(double)>& step, double initial_scale, double target_rate,
                  std::size_t window, std::size_t windows, std::vector<double>* trajectory) {
  ScaleTuner tuner(initial_scale, target_rate, window);
  while (tuner.windows_completed() < windows) {
    const std::size_t before = tuner.windows_completed();
    tuner.observe(1, step(tuner.scale()) ? 1 : 0);
    if (trajectory != nullptr && tuner.windows_completed() != before) trajectory->push_back(tuner.scale());
  }
  return tuner.scale();
}

}  // namespace eitmc
