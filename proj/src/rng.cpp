#include "mst/rng.hpp"

#include <cmath>
#include <numbers>

namespace mst {

double CounterRng::normal(double mean, double sigma) {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mean + sigma * z;
}

double CounterRng::lognormal(double mean, double cv) {
  if (cv <= 0.0) return mean;
  const double s2 = std::log1p(cv * cv);
  const double mu = std::log(mean) - 0.5 * s2;
  return std::exp(normal(mu, std::sqrt(s2)));
}

}  // namespace mst
