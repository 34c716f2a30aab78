#ifndef RESQ_TLS_ANALYSIS_HPP
#define RESQ_TLS_ANALYSIS_HPP

#include "resq/power_analysis.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace resq
{

// 1/Qi(n) = 1/q0 + (1/q_tls) / sqrt(1 + n/n_c)
double tls_model(double n_bar, double q0, double q_tls, double n_c);

struct TlsPoint
{
    double n_bar = 0.0;
    double q_internal = 0.0;
    double sigma_q_internal = 0.0; // non-finite or zero falls back to the weight floor
};

struct TlsFit
{
    double q0 = 0.0;
    double q_tls = 0.0;
    double n_c = 0.0;
    // keys: q0, q_tls, n_c, inv_q0, inv_q_tls
    std::map<std::string, double> sigma;
    double rrsd_percent = 0.0;
    double mean_residual_percent = 0.0;
    double frac_tls_lowpower = 0.0;
    double frac_background_lowpower = 0.0;
    bool converged = false;
    bool insufficient_dynamic_range = false; // n_bar spans < 2 decades
    bool degenerate_n_c = false;             // sigma(n_c) > n_c or n_c outside the sampled range
    int iterations = 0;
    std::size_t n_points = 0;
};

struct ResidualStats
{
    double rrsd_percent = 0.0;
    double mean_percent = 0.0;
};

struct LossDecomposition
{
    double background = 0.0; // 1/q0
    double tls = 0.0;        // (1/q_tls)/sqrt(1 + n/n_c)
    double fraction_tls = 0.0;
};

/// Relative weight floor: sigma(1/Qi) is never taken below this fraction of 1/Qi.
inline constexpr double kTlsWeightFloor = 1e-6;
// n_c is confined to [n_min / margin, n_max * margin]
inline constexpr double kTlsNcMargin = 1e3;

std::vector<TlsPoint> tls_points(const PowerSeries &series);

/// Weighted least squares in loss space over log(q0), log(q_tls), log(n_c).
/// Throws InsufficientSeries below 4 points, ConvergenceFailure when the
/// optimiser stops early. A span under two decades is flagged, not rejected.
TlsFit fit_tls(std::span<const TlsPoint> points);
TlsFit fit_tls(const PowerSeries &series);

/// 100 * sample std (N-1) of (meas - model)/meas in loss space; the mean of the
/// same residuals is reported alongside. Throws InsufficientSeries for N < 3.
ResidualStats residual_stats(std::span<const TlsPoint> points, const TlsFit &fit);
double rrsd(const PowerSeries &series, const TlsFit &fit);

LossDecomposition decompose_loss(const TlsFit &fit, double n_bar);

struct CohortSummary
{
    std::string cohort_label;
    std::vector<double> q_tls_values;
    double mean_q_tls = 0.0;
    double min_q_tls = 0.0;
    double max_q_tls = 0.0;
};

CohortSummary make_cohort_summary(std::string label, std::vector<double> q_tls_values);

struct CohortComparison
{
    std::vector<CohortSummary> ordered; // descending mean Q_TLS
    // ratio[i][j] = ordered[i].mean / ordered[j].mean
    std::vector<std::vector<double>> mean_ratio;

    double ratio(const std::string &numerator, const std::string &denominator) const;
};

CohortComparison compare_cohorts(std::span<const CohortSummary> cohorts);

} // namespace resq

#endif
