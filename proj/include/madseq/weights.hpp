#pragma once

#include <cstdint>
#include <string>

namespace madseq {

/// Step-size sequence w_n of the predictive recursion.
///   PowerLaw:  w_n = (alpha + n)^(-lambda)
///   Dpm:       w_n = (2 - 1/n) / (n + 1)
///   Adaptive:  w_n = (alpha + n)^(-lambda_n), lambda_n = lambda + (1 - lambda) exp(-n / n_star)
class WeightSchedule {
 public:
  enum class Variant { PowerLaw, Dpm, Adaptive };

  static WeightSchedule power_law(double alpha, double lambda);
  static WeightSchedule dpm();
  static WeightSchedule adaptive(double alpha, double lambda, double n_star);

  Variant variant() const { return variant_; }
  double alpha() const { return alpha_; }
  double lambda() const { return lambda_; }
  double n_star() const { return n_star_; }

  /// lambda_n for Adaptive, lambda for PowerLaw; undefined (throws) for Dpm.
  double exponent_at(std::int64_t n) const;
  double at(std::int64_t n) const;

  std::string name() const;
  bool operator==(const WeightSchedule&) const = default;

 private:
  WeightSchedule(Variant v, double alpha, double lambda, double n_star)
      : variant_(v), alpha_(alpha), lambda_(lambda), n_star_(n_star) {}

  Variant variant_ = Variant::PowerLaw;
  double alpha_ = 1.0;
  double lambda_ = 1.0;
  double n_star_ = 0.0;
};

double weight_at(const WeightSchedule& s, std::int64_t n);

}  // namespace madseq
