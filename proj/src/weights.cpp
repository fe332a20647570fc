#include "madseq/weights.hpp"

#include <cmath>
#include <sstream>

#include "madseq/error.hpp"

namespace madseq {

namespace {

void check_alpha_lambda(double alpha, double lambda) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("weight schedule alpha must be positive");
  if (!(lambda > 0.5 && lambda <= 1.0)) throw ConfigError("weight schedule lambda must lie in (0.5, 1]");
}

}  // namespace

WeightSchedule WeightSchedule::power_law(double alpha, double lambda) {
  check_alpha_lambda(alpha, lambda);
  return WeightSchedule(Variant::PowerLaw, alpha, lambda, 0.0);
}

WeightSchedule WeightSchedule::dpm() { return WeightSchedule(Variant::Dpm, 0.0, 1.0, 0.0); }

WeightSchedule WeightSchedule::adaptive(double alpha, double lambda, double n_star) {
  check_alpha_lambda(alpha, lambda);
  if (!(n_star > 0.0) || !std::isfinite(n_star)) throw ConfigError("adaptive schedule n_star must be positive");
  return WeightSchedule(Variant::Adaptive, alpha, lambda, n_star);
}

double WeightSchedule::exponent_at(std::int64_t n) const {
  switch (variant_) {
    case Variant::PowerLaw:
      return lambda_;
    case Variant::Adaptive:
      return lambda_ + (1.0 - lambda_) * std::exp(-static_cast<double>(n) / n_star_);
    case Variant::Dpm:
      break;
  }
  throw ConfigError("the dpm schedule has no power-law exponent");
}

double WeightSchedule::at(std::int64_t n) const {
  if (n < 1) throw ConfigError("weights are indexed from n = 1");
  const auto x = static_cast<double>(n);
  if (variant_ == Variant::Dpm) return (2.0 - 1.0 / x) / (x + 1.0);
  return std::pow(alpha_ + x, -exponent_at(n));
}

std::string WeightSchedule::name() const {
  std::ostringstream os;
  os.precision(17);
  switch (variant_) {
    case Variant::PowerLaw:
      os << "power_law(alpha=" << alpha_ << ",lambda=" << lambda_ << ")";
      break;
    case Variant::Dpm:
      os << "dpm";
      break;
    case Variant::Adaptive:
      os << "adaptive(alpha=" << alpha_ << ",lambda=" << lambda_ << ",n_star=" << n_star_ << ")";
      break;
  }
  return os.str();
}

double weight_at(const WeightSchedule& s, std::int64_t n) { return s.at(n); }

}  // namespace madseq
