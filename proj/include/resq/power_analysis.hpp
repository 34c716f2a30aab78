#ifndef RESQ_POWER_ANALYSIS_HPP
#define RESQ_POWER_ANALYSIS_HPP

#include "resq/resonance_fit.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace resq
{

struct BudgetItem
{
    std::string label;
    double loss_db = 0.0;
    std::string note;
};

// Input-line attenuation between the source and the chip. The applied value
// defaults to the total rounded to the nearest dB.
struct AttenuationBudget
{
    std::vector<BudgetItem> items;
    std::optional<double> used_db_override;

    double total_db() const;
    double used_db() const;
    // Non-empty, non-negative items; default used_db within 1 dB of total.
    void validate() const;
};

/// Reference input line of the Nb/Ta measurement setup (five rows, 69.35 dB).
AttenuationBudget reference_input_line();

struct PowerPoint
{
    double p_source_dbm = 0.0;
    double p_chip_dbm = 0.0;
    double n_bar = 0.0;
    double q_internal = 0.0;
    double sigma_q_internal = 0.0;
    std::string source; // file or label the fit came from
    ResonanceFit fit;
};

struct RejectedPoint
{
    double p_source_dbm = 0.0;
    std::string source;
    std::string reason;
};

struct PowerSeries
{
    std::string resonator_id;
    std::vector<PowerPoint> points; // ascending n_bar
    double f_r_median = 0.0;
    std::vector<RejectedPoint> rejected;

    // Keeps `points` sorted by (n_bar, p_source_dbm); equal keys keep insertion order.
    void insert(PowerPoint point);
};

struct SourceFit
{
    double p_source_dbm = 0.0;
    ResonanceFit fit;
    std::string source;
};

double chip_power(double p_source_dbm, const AttenuationBudget &budget);

/// Mean intracavity photon number 2 P Ql^2 / (hbar w_r^2 |Qe|), w_r = 2 pi f_r.
double photon_number(double p_chip_watts, double f_r, double q_loaded, double q_external_mag);

/// Accepts fits through `gates`, computes one PowerPoint per accepted fit from
/// its own Ql, |Qe| and f_r, and sorts by n_bar. Throws InsufficientSeries with
/// fewer than 4 accepted points or a source-power span below 20 dB.
PowerSeries build_power_series(std::span<const SourceFit> fits, const AttenuationBudget &budget,
                               const std::string &id, const FitGates &gates = {});

} // namespace resq

#endif
