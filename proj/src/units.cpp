#include "tbsim/units.hpp"

#include <cmath>
#include <stdexcept>

namespace tbsim {

double db_to_transmittance(double loss_db) {
  if (!std::isfinite(loss_db) || loss_db < 0.0) {
    throw std::domain_error("db_to_transmittance: loss_db must be finite and >= 0");
  }
  return std::pow(10.0, -loss_db / 10.0);
}

double db_to_attenuation_per_m(double loss_db, double length_m) {
  if (!std::isfinite(loss_db) || loss_db < 0.0) {
    throw std::domain_error("db_to_attenuation_per_m: loss_db must be finite and >= 0");
  }
  if (!(length_m > 0.0)) {
    throw std::domain_error("db_to_attenuation_per_m: length must be > 0");
  }
  return loss_db * std::log(10.0) / (10.0 * length_m);
}

} // namespace tbsim
