#ifndef RESQ_RESONANCE_FIT_HPP
#define RESQ_RESONANCE_FIT_HPP

#include "resq/s21_model.hpp"

#include <map>
#include <span>
#include <string>

namespace resq
{

inline constexpr const char *kResonanceMethodTag = "circle+phase+lm";
inline constexpr const char *kQiConvention = "diameter-corrected: 1/Qi = 1/Ql - cos(theta)/|Qe|";
inline constexpr const char *kBackgroundModel =
    "a(f) = 10^((A + slope*(f - f_ref))/20) * exp(i*(alpha - 2*pi*f*tau)), f_ref = window center";

struct ResonanceFit
{
    ResonanceParams params;
    BackgroundParams background;
    double q_internal = 0.0;
    // 1-sigma uncertainties keyed by the report field name (f_r_hz, q_loaded,
    // q_external_mag, theta, q_internal, inv_q_internal, amp_db_at_fref,
    // amp_slope_db_per_hz, phase_offset_alpha, cable_delay_tau).
    std::map<std::string, double> sigma;
    double residual_rms = 0.0;
    std::size_t n_points_used = 0;
    bool converged = false;
    std::string method_tag = kResonanceMethodTag;
    double window_start = 0.0;
    double window_stop = 0.0;
    int iterations = 0;

    double sigma_of(const std::string &key) const;
};

struct FitGates
{
    double max_rel_sigma_qi = 0.5;
};

/// Acceptance for downstream use: converged, sigma(Qi)/Qi below the gate and
/// f_r strictly inside the sweep window. On rejection `reason` says why.
bool passes_gates(const ResonanceFit &fit, const FitGates &gates, std::string *reason = nullptr);

/// Cable delay from the outer 20% of the window on each side: unwrapped wing
/// phase is fitted with a shared offset, a linear term and 1/(f - f0),
/// 1/(f - f0)^2 tail terms of the resonance. Throws InsufficientWings with
/// fewer than 6 points per side.
double estimate_delay(const ComplexSweep &sweep);

/// Taubin algebraic circle fit. Throws DegenerateGeometry for fewer than 8
/// points or a scatter condition number above 1e12.
Circle fit_circle(std::span<const Complex> points);

struct PhaseFit
{
    double f_r = 0.0;
    double q_loaded = 0.0;
    double phase_offset = 0.0; // angle of (S21 - center) at f_r
};

/// Fits phi(f) = phi0 + 2 atan(2 Ql (1 - f/fr)) to the angle of
/// (S21 - center). The sweep must already be free of cable delay.
PhaseFit fit_phase(const ComplexSweep &sweep_translated, Complex center);

/// Full pipeline: delay, wing normalisation, circle, phase, off-resonance
/// point, then joint Levenberg-Marquardt over resonance and background.
ResonanceFit fit_resonance(const ComplexSweep &sweep);

} // namespace resq

#endif
