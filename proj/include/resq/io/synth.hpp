#ifndef RESQ_IO_SYNTH_HPP
#define RESQ_IO_SYNTH_HPP

#include "resq/io/sweep_io.hpp"
#include "resq/power_analysis.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace resq::io
{

struct SynthOptions
{
    std::uint64_t seed = 1;
    double noise = 1e-3; // per-quadrature std
    SweepFormat format = SweepFormat::CsvRealImag;
    std::size_t points = 201;
    int n_resonators = 8;
    double f_first = 5.0e9;
    double f_spacing = 200e6;
    std::vector<double> powers_dbm = {-30, -35, -40, -45, -50, -55, -60, -65, -70, -75, -80};
    double cable_delay = 40e-9;
};

struct ResonatorTruth
{
    std::string resonator_id;
    double f_r = 0.0;
    double q0 = 0.0;
    double q_tls = 0.0;
    double n_c = 0.0;
    double frac_tls_lowpower = 0.0;
    double q_external_mag = 0.0;
    double theta = 0.0;
    double amp_db = 0.0;
    double amp_slope_db_per_hz = 0.0;
    double alpha = 0.0;
};

struct SynthPowerPoint
{
    double p_source_dbm = 0.0;
    double n_bar = 0.0;
    double q_internal = 0.0;
    double q_loaded = 0.0;
};

/// Draws chip parameters from the seed: q0 in [2e6, 4e6], TLS share of
/// low-power loss in [0.2, 0.4], n_c log-uniform in [5e2, 5e3], |Qe| around
/// 1e5 and |theta| <= 0.1.
std::vector<ResonatorTruth> draw_chip(const SynthOptions &options);

/// Self-consistent operating point at one source power: Qi depends on n_bar,
/// which depends on Ql and so on Qi.
SynthPowerPoint operating_point(const ResonatorTruth &truth, double p_source_dbm,
                                const AttenuationBudget &budget);

ComplexSweep synthesize_power_sweep(const ResonatorTruth &truth, const SynthPowerPoint &point,
                                    const SynthOptions &options, std::uint64_t sweep_seed);

/// Writes sweeps/<id>_<power>.<ext>, run.json and truth.json under out_dir.
std::vector<ResonatorTruth> write_synthetic_chip(const std::filesystem::path &out_dir,
                                                 const SynthOptions &options);

std::string truth_json(const std::vector<ResonatorTruth> &truth, const SynthOptions &options);

} // namespace resq::io

#endif
