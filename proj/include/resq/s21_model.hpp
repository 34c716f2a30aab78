#ifndef RESQ_S21_MODEL_HPP
#define RESQ_S21_MODEL_HPP

#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace resq
{

using Complex = std::complex<double>;

inline constexpr std::size_t kMinSweepPoints = 32;
inline constexpr std::size_t kRecommendedSweepPoints = 201;

// Notch-type resonance: S21 = a(f) [1 - (Ql/|Qe|) e^{i theta} / (1 + 2i Ql (f - fr)/fr)].
struct ResonanceParams
{
    double f_r = 0.0; // Hz
    double q_loaded = 0.0;
    double q_external_mag = 0.0;
    double theta = 0.0; // rad

    // Circle diameter Ql/|Qe| in units of |a|.
    double depth() const { return q_loaded / q_external_mag; }
    void validate() const;
};

// a(f) = 10^((A + slope (f - f_ref))/20) exp(i (alpha - 2 pi f tau))
struct BackgroundParams
{
    double amp_db_at_fref = 0.0;
    double amp_slope_db_per_hz = 0.0;
    double phase_offset_alpha = 0.0; // rad
    double cable_delay_tau = 0.0;    // s
    double f_ref = 0.0;              // Hz

    Complex at(double f) const;
};

struct ComplexSweep
{
    std::vector<double> freqs; // Hz, strictly increasing
    std::vector<Complex> s21;  // linear scale
    double power_dbm_at_source = 0.0;
    bool has_power = false;
    std::map<std::string, std::string> metadata;

    std::size_t size() const { return freqs.size(); }

    // Throws MalformedSweep on length mismatch, non-monotone frequency,
    // non-finite samples, or fewer than `min_points` samples.
    void validate(std::size_t min_points = kMinSweepPoints) const;
};

struct SweepWindow
{
    double f_start = 0.0;
    double f_stop = 0.0;
    std::size_t n_points = kRecommendedSweepPoints;
};

struct Circle
{
    Complex center;
    double radius = 0.0;
};

/// Resonance factor with a(f) = 1.
Complex eval_resonance(const ResonanceParams &res, double f);

Complex eval_s21(const ResonanceParams &res, const BackgroundParams &bg, double f);

/// Noise is added independently to real and imaginary parts with std
/// `noise_sigma`; the generator is seeded per call. A window that does not
/// contain f_r is flagged in metadata["warning"] = "WindowMismatch".
ComplexSweep synthesize_sweep(const ResonanceParams &res, const BackgroundParams &bg,
                              const SweepWindow &window, double noise_sigma, std::uint64_t seed);

/// Window of `half_span_linewidths` loaded linewidths (f_r/Q_l) each side of f_r.
SweepWindow centered_window(double f_r, double q_loaded, double half_span_linewidths = 5.0,
                            std::size_t n_points = kRecommendedSweepPoints);

/// Locus of eval_resonance over f: radius Ql/(2|Qe|), center 1 - radius e^{i theta}.
Circle ideal_circle(const ResonanceParams &res);

} // namespace resq

#endif
