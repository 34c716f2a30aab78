#include "resq/core.hpp"

#include "resq/errors.hpp"

#include <cmath>
#include <string>

namespace resq
{

double dbm_to_watts(double dbm)
{
    if (!std::isfinite(dbm))
        throw Error(ErrorKind::InvalidInput, "power in dBm must be finite");
    return 1e-3 * std::pow(10.0, dbm / 10.0);
}

double watts_to_dbm(double watts)
{
    if (!(watts > 0.0) || !std::isfinite(watts))
        throw Error(ErrorKind::InvalidInput, "power in watts must be positive and finite");
    return 10.0 * std::log10(watts / 1e-3);
}

double q_internal(double q_loaded, double q_external)
{
    if (!(q_loaded > 0.0) || !(q_external > 0.0))
        throw Error(ErrorKind::InvalidInput, "quality factors must be positive");
    if (q_external <= q_loaded)
        throw Error(ErrorKind::NonPhysicalFit,
                    "external Q must exceed loaded Q (internal Q would be negative or infinite)");
    return 1.0 / (1.0 / q_loaded - 1.0 / q_external);
}

double q_loaded_from(double q_internal, double q_external)
{
    if (!(q_internal > 0.0) || !(q_external > 0.0))
        throw Error(ErrorKind::InvalidInput, "quality factors must be positive");
    return 1.0 / (1.0 / q_internal + 1.0 / q_external);
}

double q_internal_from_fit(double q_loaded, double q_external_mag, double theta)
{
    if (!(q_loaded > 0.0) || !(q_external_mag > 0.0) || !std::isfinite(theta))
        throw Error(ErrorKind::InvalidInput, "quality factors must be positive, theta finite");
    // Re(1/Qe) must be positive for a passively coupled notch.
    if (!(std::cos(theta) > 1e-12))
        throw Error(ErrorKind::NonPhysicalFit, "|theta| >= pi/2 leaves no positive external coupling");
    const double inverse = 1.0 / q_loaded - std::cos(theta) / q_external_mag;
    if (!(inverse > 0.0))
        throw Error(ErrorKind::NonPhysicalFit,
                    "internal loss 1/Qi = " + std::to_string(inverse) + " is not positive");
    return 1.0 / inverse;
}

double q_external_effective(double q_external_mag, double theta)
{
    return q_external_mag / std::cos(theta);
}

double wrap_phase(double angle)
{
    double wrapped = std::remainder(angle, 2.0 * kPi);
    if (wrapped <= -kPi)
        wrapped += 2.0 * kPi;
    return wrapped;
}

QualityFactors QualityFactors::from_fit(double q_loaded, double q_external_mag, double theta)
{
    return {q_loaded, q_external_mag, theta, q_internal_from_fit(q_loaded, q_external_mag, theta)};
}

} // namespace resq
