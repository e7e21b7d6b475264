#pragma once

namespace tbsim {

/// Converts a loss figure in dB to a power transmittance in (0,1].
/// Throws std::domain_error for negative or non-finite input.
double db_to_transmittance(double loss_db);

/// Natural attenuation coefficient [1/m] equivalent to `loss_db`
/// distributed over `length_m`.
double db_to_attenuation_per_m(double loss_db, double length_m);

} // namespace tbsim
