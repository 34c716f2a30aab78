#ifndef RESQ_IO_PLOTS_HPP
#define RESQ_IO_PLOTS_HPP

#include "resq/io/report.hpp"
#include "resq/tls_analysis.hpp"

#include <span>
#include <string>

namespace resq::io
{

// Static SVG figures. Output depends only on the data passed in.

/// Qi against mean photon number on log-log axes, one marker series and model
/// curve per resonator.
std::string plot_qi_vs_nbar(std::span<const ResonatorOutcome> outcomes);

/// Measured 1/Qi with the background and TLS parts of the fitted model, plus a
/// residual panel in percent underneath.
std::string plot_decomposition(const ResonatorOutcome &outcome);

/// One stacked bar per resonator: TLS share over background share at low power.
std::string plot_loss_fractions(std::span<const ResonatorOutcome> outcomes);

/// Q_TLS values per cohort with the cohort mean marked.
std::string plot_cohort_qtls(std::span<const CohortSummary> cohorts);

} // namespace resq::io

#endif
