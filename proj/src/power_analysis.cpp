#include "resq/power_analysis.hpp"

#include "resq/core.hpp"
#include "resq/errors.hpp"

#include <algorithm>
#include <cmath>

namespace resq
{

double AttenuationBudget::total_db() const
{
    double total = 0.0;
    for (const BudgetItem &item : items)
        total += item.loss_db;
    return total;
}

double AttenuationBudget::used_db() const
{
    return used_db_override ? *used_db_override : std::round(total_db());
}

void AttenuationBudget::validate() const
{
    if (items.empty())
        throw Error(ErrorKind::InvalidInput, "attenuation budget has no items");
    for (const BudgetItem &item : items)
        if (!(item.loss_db >= 0.0) || !std::isfinite(item.loss_db))
            throw Error(ErrorKind::InvalidInput,
                        "budget item '" + item.label + "' has a negative or non-finite loss");
    if (used_db_override && !std::isfinite(*used_db_override))
        throw Error(ErrorKind::InvalidInput, "used_db override must be finite");
}

AttenuationBudget reference_input_line()
{
    AttenuationBudget budget;
    budget.items = {
        {"Direct attenuators", 62.0, "fixed cryogenic attenuators"},
        {"Low-pass filter", 0.35, "datasheet maximum"},
        {"IR filter", 2.0, "below 1.8 dB at 10 GHz, rounded up"},
        {"Room-temperature coax", 3.0, "3-4 m of cable with connectors"},
        {"Fridge internal coax", 2.0, ""},
    };
    return budget;
}

void PowerSeries::insert(PowerPoint point)
{
    const auto pos = std::upper_bound(points.begin(), points.end(), point,
                                      [](const PowerPoint &a, const PowerPoint &b) {
                                          if (a.n_bar != b.n_bar)
                                              return a.n_bar < b.n_bar;
                                          return a.p_source_dbm < b.p_source_dbm;
                                      });
    points.insert(pos, std::move(point));
}

double chip_power(double p_source_dbm, const AttenuationBudget &budget)
{
    return p_source_dbm - budget.used_db();
}

double photon_number(double p_chip_watts, double f_r, double q_loaded, double q_external_mag)
{
    if (!(p_chip_watts > 0.0) || !(f_r > 0.0) || !(q_loaded > 0.0) || !(q_external_mag > 0.0))
        throw Error(ErrorKind::InvalidInput, "photon number inputs must be positive");
    const double omega = 2.0 * kPi * f_r;
    return 2.0 * p_chip_watts * q_loaded * q_loaded /
           (PhysicalConstants::hbar * omega * omega * q_external_mag);
}

PowerSeries build_power_series(std::span<const SourceFit> fits, const AttenuationBudget &budget,
                               const std::string &id, const FitGates &gates)
{
    budget.validate();
    PowerSeries series;
    series.resonator_id = id;
    std::vector<double> f_r;
    for (const SourceFit &entry : fits)
    {
        std::string reason;
        if (!passes_gates(entry.fit, gates, &reason))
        {
            series.rejected.push_back({entry.p_source_dbm, entry.source, reason});
            continue;
        }
        PowerPoint point;
        point.p_source_dbm = entry.p_source_dbm;
        point.p_chip_dbm = chip_power(entry.p_source_dbm, budget);
        point.n_bar = photon_number(dbm_to_watts(point.p_chip_dbm), entry.fit.params.f_r,
                                    entry.fit.params.q_loaded, entry.fit.params.q_external_mag);
        point.q_internal = entry.fit.q_internal;
        point.sigma_q_internal = entry.fit.sigma_of("q_internal");
        point.source = entry.source;
        point.fit = entry.fit;
        f_r.push_back(entry.fit.params.f_r);
        series.insert(std::move(point));
    }

    if (series.points.size() < 4)
        throw Error(ErrorKind::InsufficientSeries,
                    "resonator " + id + " has " + std::to_string(series.points.size()) +
                        " accepted fits, need at least 4",
                    "build_power_series");
    const auto [lo, hi] = std::minmax_element(
        series.points.begin(), series.points.end(),
        [](const PowerPoint &a, const PowerPoint &b) { return a.p_source_dbm < b.p_source_dbm; });
    if (hi->p_source_dbm - lo->p_source_dbm < 20.0)
        throw Error(ErrorKind::InsufficientSeries,
                    "accepted fits for " + id + " span less than 20 dB of source power",
                    "build_power_series");

    std::sort(f_r.begin(), f_r.end());
    const std::size_t m = f_r.size();
    series.f_r_median = (m % 2 == 1) ? f_r[m / 2] : 0.5 * (f_r[m / 2 - 1] + f_r[m / 2]);
    return series;
}

} // namespace resq
