#ifndef RESQ_IO_REPORT_HPP
#define RESQ_IO_REPORT_HPP

#include "resq/power_analysis.hpp"
#include "resq/tls_analysis.hpp"

#include <span>
#include <string>
#include <vector>

namespace resq::io
{

// Everything the pipeline learned about one resonator. `ok` means a converged
// TLS fit; otherwise error_* say where it stopped. `has_series` is set once
// the power series was built, even if the TLS fit later failed.
struct ResonatorOutcome
{
    std::string resonator_id;
    std::vector<std::string> files;
    bool ok = false;
    bool has_series = false;
    PowerSeries series;
    TlsFit tls;
    LossDecomposition at_zero;
    LossDecomposition at_one;
    std::string error_kind;
    std::string error_stage;
    std::string error_message;
};

/// Rounds to 9 significant digits so reports are stable across platforms.
double round9(double value);
/// "%.9g" in the C locale; non-finite values print as nan / inf / -inf.
std::string fmt9(double value);

std::string resonator_report_json(const ResonatorOutcome &outcome, const AttenuationBudget &budget,
                                  const std::string &cohort_label);

/// resonator_id,f_r_hz,q0,q_tls,n_c,rrsd_percent,frac_tls_lowpower
/// One row per successful resonator, in the given order.
std::string summary_csv(std::span<const ResonatorOutcome> outcomes);

/// resonator_id,error_kind,stage,message for the failed ones.
std::string errors_csv(std::span<const ResonatorOutcome> outcomes);

/// Human-readable error table for stderr.
std::string error_table(std::span<const ResonatorOutcome> outcomes);

struct SummaryRow
{
    std::string resonator_id;
    double f_r_hz = 0.0;
    double q0 = 0.0;
    double q_tls = 0.0;
    double n_c = 0.0;
    double rrsd_percent = 0.0;
    double frac_tls_lowpower = 0.0;
};

/// Reads a summary.csv written by summary_csv. Throws MalformedSweep on shape errors.
std::vector<SummaryRow> parse_summary_csv(std::string_view text);

std::string cohort_comparison_csv(const CohortComparison &comparison);

} // namespace resq::io

#endif
