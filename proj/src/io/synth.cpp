#include "resq/io/synth.hpp"

#include "resq/core.hpp"
#include "resq/errors.hpp"
#include "resq/io/config.hpp"
#include "resq/io/report.hpp"
#include "resq/tls_analysis.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <random>

namespace resq::io
{

std::vector<ResonatorTruth> draw_chip(const SynthOptions &options)
{
    if (options.n_resonators < 1)
        throw Error(ErrorKind::InvalidInput, "synthetic chip needs at least one resonator");
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<ResonatorTruth> chip;
    for (int i = 0; i < options.n_resonators; ++i)
    {
        ResonatorTruth t;
        t.resonator_id = "R" + std::to_string(i + 1);
        t.f_r = options.f_first + options.f_spacing * i;
        t.q0 = 2e6 + 2e6 * unit(rng);
        t.frac_tls_lowpower = 0.2 + 0.2 * unit(rng);
        t.q_tls = t.q0 * (1.0 - t.frac_tls_lowpower) / t.frac_tls_lowpower;
        t.n_c = std::pow(10.0, std::log10(5e2) + unit(rng));
        t.q_external_mag = 1e5 * std::pow(10.0, 0.3 * (unit(rng) - 0.5));
        t.theta = 0.2 * (unit(rng) - 0.5);
        t.amp_db = -8.0 + 6.0 * unit(rng);
        t.amp_slope_db_per_hz = 4e-7 * (unit(rng) - 0.5);
        t.alpha = kPi * (2.0 * unit(rng) - 1.0);
        chip.push_back(t);
    }
    return chip;
}

SynthPowerPoint operating_point(const ResonatorTruth &truth, double p_source_dbm,
                                const AttenuationBudget &budget)
{
    const double p_chip = dbm_to_watts(chip_power(p_source_dbm, budget));
    const double coupling = std::cos(truth.theta) / truth.q_external_mag;
    double qi = truth.q0;
    double n_bar = 0.0;
    double ql = 0.0;
    for (int iter = 0; iter < 200; ++iter)
    {
        ql = 1.0 / (1.0 / qi + coupling);
        n_bar = photon_number(p_chip, truth.f_r, ql, truth.q_external_mag);
        const double next = 1.0 / tls_model(n_bar, truth.q0, truth.q_tls, truth.n_c);
        if (std::abs(next - qi) <= 1e-14 * qi)
        {
            qi = next;
            break;
        }
        qi = next;
    }
    ql = 1.0 / (1.0 / qi + coupling);
    return {p_source_dbm, n_bar, qi, ql};
}

ComplexSweep synthesize_power_sweep(const ResonatorTruth &truth, const SynthPowerPoint &point,
                                    const SynthOptions &options, std::uint64_t sweep_seed)
{
    ResonanceParams res{truth.f_r, point.q_loaded, truth.q_external_mag, truth.theta};
    const SweepWindow window = centered_window(truth.f_r, point.q_loaded, 5.0, options.points);
    BackgroundParams bg;
    bg.amp_db_at_fref = truth.amp_db;
    bg.amp_slope_db_per_hz = truth.amp_slope_db_per_hz;
    bg.phase_offset_alpha = truth.alpha;
    bg.cable_delay_tau = options.cable_delay;
    bg.f_ref = truth.f_r;
    ComplexSweep sweep = synthesize_sweep(res, bg, window, options.noise, sweep_seed);
    sweep.power_dbm_at_source = point.p_source_dbm;
    sweep.has_power = true;
    sweep.metadata["resonator_id"] = truth.resonator_id;
    sweep.metadata["power_dbm"] = fmt9(point.p_source_dbm);
    sweep.metadata["format"] = std::string(format_tag(options.format));
    return sweep;
}

namespace
{

std::string power_tag(double p)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%03ddBm", p < 0 ? "m" : "p",
                  static_cast<int>(std::lround(std::abs(p))));
    return buf;
}

const char *extension(SweepFormat f)
{
    return f == SweepFormat::Touchstone ? ".s2p" : ".csv";
}

} // namespace

std::string truth_json(const std::vector<ResonatorTruth> &truth, const SynthOptions &options)
{
    nlohmann::ordered_json doc;
    doc["seed"] = options.seed;
    doc["noise"] = options.noise;
    doc["cable_delay_s"] = options.cable_delay;
    doc["points"] = options.points;
    doc["format"] = std::string(format_tag(options.format));
    doc["powers_dbm"] = options.powers_dbm;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const ResonatorTruth &t : truth)
        rows.push_back({{"resonator_id", t.resonator_id},
                        {"f_r_hz", t.f_r},
                        {"q0", t.q0},
                        {"q_tls", t.q_tls},
                        {"n_c", t.n_c},
                        {"frac_tls_lowpower", t.frac_tls_lowpower},
                        {"q_external_mag", t.q_external_mag},
                        {"theta_rad", t.theta},
                        {"amp_db", t.amp_db},
                        {"amp_slope_db_per_hz", t.amp_slope_db_per_hz},
                        {"phase_offset_alpha", t.alpha}});
    doc["resonators"] = rows;
    return doc.dump(2) + "\n";
}

std::vector<ResonatorTruth> write_synthetic_chip(const std::filesystem::path &out_dir,
                                                 const SynthOptions &options)
{
    const std::vector<ResonatorTruth> chip = draw_chip(options);
    const AttenuationBudget budget = reference_input_line();
    prepare_output_dir(out_dir / "sweeps");

    std::uint64_t index = 0;
    for (const ResonatorTruth &t : chip)
        for (double p : options.powers_dbm)
        {
            const SynthPowerPoint point = operating_point(t, p, budget);
            const std::uint64_t seed = options.seed * 0x9E3779B97F4A7C15ULL + (++index);
            const ComplexSweep sweep = synthesize_power_sweep(t, point, options, seed);
            write_sweep(out_dir / "sweeps" / (t.resonator_id + "_" + power_tag(p) +
                                              extension(options.format)),
                        sweep, options.format);
        }

    RunConfig config;
    config.data_globs = {std::string("sweeps/*") + extension(options.format)};
    config.budget = budget;
    config.cohort_label = "synthetic";
    config.seed = options.seed;
    config.output_dir = "out";
    write_text_file(out_dir / "run.json", format_run_config(config));
    write_text_file(out_dir / "truth.json", truth_json(chip, options));
    return chip;
}

} // namespace resq::io
