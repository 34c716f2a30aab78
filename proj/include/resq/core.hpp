#ifndef RESQ_CORE_HPP
#define RESQ_CORE_HPP

#include <numbers>

namespace resq
{

struct PhysicalConstants
{
    static constexpr double hbar = 1.054571817e-34; // J s
    static constexpr double c0 = 299792458.0;       // m/s
};

inline constexpr double kPi = std::numbers::pi;

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

// Power expressed in dBm; watts are derived on demand.
struct PowerLevel
{
    double dbm = 0.0;

    double watts() const { return dbm_to_watts(dbm); }
    static PowerLevel from_watts(double watts) { return {watts_to_dbm(watts)}; }
};

/// Internal Q from loaded and (real) external Q: 1/Qi = 1/Ql - 1/Qe.
/// `q_external` may be +inf (no coupling). Throws NonPhysicalFit when
/// q_external <= q_loaded.
double q_internal(double q_loaded, double q_external);

/// Loaded Q from internal and external Q (the forward direction of the above).
double q_loaded_from(double q_internal, double q_external);

/// Internal Q from a notch fit with complex external Q |Qe| e^{-i theta}:
/// 1/Qi = 1/Ql - cos(theta)/|Qe|. Reduces to q_internal() at theta = 0.
double q_internal_from_fit(double q_loaded, double q_external_mag, double theta);

/// Real-part-corrected external Q, |Qe| / cos(theta).
double q_external_effective(double q_external_mag, double theta);

/// Wraps an angle into (-pi, pi].
double wrap_phase(double angle);

struct QualityFactors
{
    double q_loaded = 0.0;
    double q_external_mag = 0.0;
    double q_external_phase_theta = 0.0;
    double q_internal = 0.0;

    // Builds a record with q_internal derived through q_internal_from_fit.
    static QualityFactors from_fit(double q_loaded, double q_external_mag, double theta);

    double q_external_eff() const
    {
        return q_external_effective(q_external_mag, q_external_phase_theta);
    }
};

} // namespace resq

#endif
