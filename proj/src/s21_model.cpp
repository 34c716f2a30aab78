#include "resq/s21_model.hpp"

#include "resq/core.hpp"
#include "resq/errors.hpp"

#include <cmath>
#include <random>
#include <string>

namespace resq
{

void ResonanceParams::validate() const
{
    if (!(f_r > 0.0) || !(q_loaded > 0.0) || !(q_external_mag > 0.0) || !std::isfinite(theta))
        throw Error(ErrorKind::InvalidInput, "resonance parameters must be positive and finite");
}

Complex BackgroundParams::at(double f) const
{
    const double mag = std::pow(10.0, (amp_db_at_fref + amp_slope_db_per_hz * (f - f_ref)) / 20.0);
    return std::polar(mag, phase_offset_alpha - 2.0 * kPi * f * cable_delay_tau);
}

void ComplexSweep::validate(std::size_t min_points) const
{
    if (freqs.size() != s21.size())
        throw Error(ErrorKind::MalformedSweep, "frequency and S21 columns differ in length");
    if (freqs.size() < min_points)
        throw Error(ErrorKind::MalformedSweep, "sweep has " + std::to_string(freqs.size()) +
                                                   " points, need at least " +
                                                   std::to_string(min_points));
    for (std::size_t i = 0; i < freqs.size(); ++i)
    {
        if (!std::isfinite(freqs[i]) || !std::isfinite(s21[i].real()) ||
            !std::isfinite(s21[i].imag()))
            throw Error(ErrorKind::MalformedSweep, "non-finite sample at row " + std::to_string(i));
        if (i > 0 && !(freqs[i] > freqs[i - 1]))
            throw Error(ErrorKind::MalformedSweep,
                        "frequencies not strictly increasing at row " + std::to_string(i));
    }
}

Complex eval_resonance(const ResonanceParams &res, double f)
{
    const Complex coupling = std::polar(res.depth(), res.theta);
    const Complex denom(1.0, 2.0 * res.q_loaded * (f - res.f_r) / res.f_r);
    return 1.0 - coupling / denom;
}

Complex eval_s21(const ResonanceParams &res, const BackgroundParams &bg, double f)
{
    return bg.at(f) * eval_resonance(res, f);
}

ComplexSweep synthesize_sweep(const ResonanceParams &res, const BackgroundParams &bg,
                              const SweepWindow &window, double noise_sigma, std::uint64_t seed)
{
    res.validate();
    if (window.n_points < 2 || !(window.f_stop > window.f_start))
        throw Error(ErrorKind::InvalidInput, "sweep window needs f_stop > f_start and >= 2 points");
    if (!(noise_sigma >= 0.0))
        throw Error(ErrorKind::InvalidInput, "noise sigma must be non-negative");

    ComplexSweep sweep;
    sweep.freqs.resize(window.n_points);
    sweep.s21.resize(window.n_points);
    const double step = (window.f_stop - window.f_start) / static_cast<double>(window.n_points - 1);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < window.n_points; ++i)
    {
        const double f = (i + 1 == window.n_points) ? window.f_stop
                                                    : window.f_start + step * static_cast<double>(i);
        sweep.freqs[i] = f;
        Complex value = eval_s21(res, bg, f);
        if (noise_sigma > 0.0)
        {
            const double re = gauss(rng);
            const double im = gauss(rng);
            value += Complex(noise_sigma * re, noise_sigma * im);
        }
        sweep.s21[i] = value;
    }
    if (res.f_r <= window.f_start || res.f_r >= window.f_stop)
        sweep.metadata["warning"] = "WindowMismatch";
    return sweep;
}

SweepWindow centered_window(double f_r, double q_loaded, double half_span_linewidths,
                            std::size_t n_points)
{
    const double half = half_span_linewidths * f_r / q_loaded;
    return {f_r - half, f_r + half, n_points};
}

Circle ideal_circle(const ResonanceParams &res)
{
    const double radius = 0.5 * res.depth();
    return {1.0 - std::polar(radius, res.theta), radius};
}

} // namespace resq
