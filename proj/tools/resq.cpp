#include "resq/core.hpp"
#include "resq/cpw_design.hpp"
#include "resq/errors.hpp"
#include "resq/io/config.hpp"
#include "resq/io/pipeline.hpp"
#include "resq/io/plots.hpp"
#include "resq/io/report.hpp"
#include "resq/io/sweep_io.hpp"
#include "resq/io/synth.hpp"
#include "resq/tls_analysis.hpp"

#include <CLI11.hpp>

#include <clocale>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace
{

using namespace resq;

struct DesignArgs
{
    double s = 0.0;
    double g = 0.0;
    double eps_r = cpw::kSiliconEpsR;
    std::optional<double> length;
    std::optional<double> target_f;
    std::optional<double> c_k;
    double r_load = 50.0;
    int n = 1;
};

void row(const char *name, double value, const char *unit)
{
    std::printf("%-26s %.6g %s\n", name, value, unit);
}

int run_design(const DesignArgs &a)
{
    if (!(a.s > 0.0) || !(a.g > 0.0) || !(a.eps_r >= 1.0) || a.n < 1 || !(a.r_load > 0.0) ||
        (a.length && !(*a.length > 0.0)) || (a.target_f && !(*a.target_f > 0.0)) ||
        (a.c_k && !(*a.c_k > 0.0)))
    {
        std::fprintf(stderr, "error: invalid geometry (s, g, length, frequency and C_k must be "
                             "positive, eps_r >= 1, n >= 1)\n");
        return 2;
    }
    const cpw::LineParameters line = cpw::line_parameters(a.s, a.g, a.eps_r);
    row("z0", line.z0, "ohm");
    row("eps_eff", line.eps_eff, "");
    row("L_per_length", line.l_per_len, "H/m");
    row("C_per_length", line.c_per_len, "F/m");

    std::optional<double> length = a.length;
    if (!length && a.target_f)
    {
        length = cpw::quarterwave_length_for(line, *a.target_f, a.n);
        row("required_length", *length * 1e3, "mm");
    }
    if (!length)
        return 0;
    if (a.length)
        row("length", *length * 1e3, "mm");

    const double f_uncoupled = cpw::uncoupled_quarterwave_freq(line, *length, a.n);
    row("f_uncoupled", f_uncoupled, "Hz");
    if (!a.c_k)
        return 0;

    const cpw::CouplingDesign coupling = cpw::make_coupling(line, *length, a.n, *a.c_k, a.r_load);
    row("C_equivalent", coupling.c_equiv, "F");
    row("L_equivalent", coupling.l_equiv_n, "H");
    std::printf("%-26s %s\n", "norton_form", "C* = Ck / (1 + w^2 Ck^2 RL^2)");
    const double f_coupled = cpw::quarterwave_coupled_freq(line, *length, a.n, *a.c_k, a.r_load);
    row("f_coupled", f_coupled, "Hz");
    const cpw::ExternalQ qe = cpw::external_q(coupling, 2.0 * kPi * f_coupled);
    row("Qe_exact", qe.exact, "");
    row("Qe_approx", qe.approximate, "");
    row("w2_Ck2_RL2", qe.loading_term, "(at f_coupled)");
    const cpw::ExternalQ qe_design = cpw::external_q(coupling, 2.0 * kPi * f_uncoupled);
    row("w2_Ck2_RL2_uncoupled", qe_design.loading_term, "(at f_uncoupled)");
    return 0;
}

int run_analyze(const std::string &config_path, const std::string &output_dir)
{
    io::RunConfig config = io::load_run_config(config_path);
    io::apply_environment(config);
    if (!output_dir.empty())
        config.output_dir = output_dir;
    const io::PipelineResult result = io::run_pipeline(config);
    if (result.exit_code == 2)
        std::fprintf(stderr, "error: %s\n", result.message.c_str());
    else if (result.exit_code == 1)
        std::fprintf(stderr, "%s", (result.message + "\n").c_str());
    else
        std::printf("%s\n", result.message.c_str());
    return result.exit_code;
}

int run_synth(const std::string &out_dir, std::uint64_t seed, double noise,
              const std::string &format, std::size_t points)
{
    io::SynthOptions options;
    options.seed = seed;
    options.noise = noise;
    options.format = io::parse_format_tag(format);
    options.points = points;
    const auto chip = io::write_synthetic_chip(out_dir, options);
    std::printf("wrote %zu resonators x %zu powers to %s\n", chip.size(),
                options.powers_dbm.size(), out_dir.c_str());
    return 0;
}

CohortSummary cohort_from_arg(const std::string &arg)
{
    const auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0)
        throw Error(ErrorKind::InvalidInput, "cohort must be label=summary.csv or label=v1,v2,...");
    const std::string label = arg.substr(0, eq);
    const std::string value = arg.substr(eq + 1);
    std::vector<double> values;
    if (std::filesystem::is_regular_file(value))
    {
        for (const io::SummaryRow &r : io::parse_summary_csv(io::read_text_file(value)))
            values.push_back(r.q_tls);
    }
    else
    {
        std::size_t start = 0;
        while (start <= value.size())
        {
            const std::size_t end = std::min(value.find(',', start), value.size());
            const std::string token = value.substr(start, end - start);
            char *stop = nullptr;
            const double v = std::strtod(token.c_str(), &stop);
            if (token.empty() || *stop != '\0')
                throw Error(ErrorKind::InvalidInput,
                            "cohort '" + label + "': '" + token + "' is neither a file nor a number");
            values.push_back(v);
            start = end + 1;
        }
    }
    return make_cohort_summary(label, values);
}

int run_compare(const std::vector<std::string> &cohort_args, const std::string &output_dir)
{
    std::vector<CohortSummary> cohorts;
    for (const std::string &arg : cohort_args)
        cohorts.push_back(cohort_from_arg(arg));
    const CohortComparison cmp = compare_cohorts(cohorts);
    std::printf("%-16s %4s %14s %14s %14s\n", "cohort", "n", "mean_q_tls", "min_q_tls",
                "max_q_tls");
    for (const CohortSummary &c : cmp.ordered)
        std::printf("%-16s %4zu %14.6g %14.6g %14.6g\n", c.cohort_label.c_str(),
                    c.q_tls_values.size(), c.mean_q_tls, c.min_q_tls, c.max_q_tls);
    std::printf("ordering:");
    for (std::size_t i = 0; i < cmp.ordered.size(); ++i)
        std::printf("%s%s", i ? " > " : " ", cmp.ordered[i].cohort_label.c_str());
    std::printf("\n");
    for (std::size_t i = 0; i < cmp.ordered.size(); ++i)
        for (std::size_t j = i + 1; j < cmp.ordered.size(); ++j)
            std::printf("ratio %s/%s = %.4f\n", cmp.ordered[i].cohort_label.c_str(),
                        cmp.ordered[j].cohort_label.c_str(), cmp.mean_ratio[i][j]);
    if (!output_dir.empty())
    {
        io::prepare_output_dir(output_dir);
        const std::filesystem::path dir = output_dir;
        io::write_text_file(dir / "cohort_comparison.csv", io::cohort_comparison_csv(cmp));
        io::write_text_file(dir / "cohort_qtls.svg", io::plot_cohort_qtls(cmp.ordered));
    }
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    std::setlocale(LC_ALL, "C");
    CLI::App app{"Superconducting resonator quality-factor analysis"};
    app.require_subcommand(1);

    DesignArgs design;
    auto *design_cmd = app.add_subcommand("design", "CPW quarter-wave resonator design values");
    design_cmd->add_option("--s", design.s, "center conductor width (m)")->required();
    design_cmd->add_option("--g", design.g, "gap width (m)")->required();
    design_cmd->add_option("--eps-r", design.eps_r, "substrate relative permittivity")
        ->capture_default_str();
    auto *len_opt = design_cmd->add_option("--length", design.length, "resonator length (m)");
    design_cmd->add_option("--target-f", design.target_f, "target frequency (Hz)")
        ->excludes(len_opt);
    design_cmd->add_option("--ck", design.c_k, "coupling capacitance (F)");
    design_cmd->add_option("--rload", design.r_load, "load resistance (ohm)")->capture_default_str();
    design_cmd->add_option("--n", design.n, "mode index")->capture_default_str();

    std::string config_path, analyze_out;
    auto *analyze_cmd = app.add_subcommand("analyze", "Fit every sweep in a run configuration");
    analyze_cmd->add_option("--config", config_path, "run configuration (JSON)")->required();
    analyze_cmd->add_option("--output-dir", analyze_out, "override the output directory");

    std::string synth_out;
    std::uint64_t synth_seed = 1;
    double synth_noise = 1e-3;
    std::string synth_format = "csv-ri";
    std::size_t synth_points = 201;
    auto *synth_cmd = app.add_subcommand("synth", "Write a synthetic 8-resonator chip");
    synth_cmd->add_option("--out-dir", synth_out, "destination directory")->required();
    synth_cmd->add_option("--seed", synth_seed)->capture_default_str();
    synth_cmd->add_option("--noise", synth_noise, "per-quadrature noise std")->capture_default_str();
    synth_cmd->add_option("--format", synth_format, "csv-ri | csv-magphase | touchstone-s2p")
        ->capture_default_str();
    synth_cmd->add_option("--points", synth_points, "points per sweep")->capture_default_str();

    std::vector<std::string> cohorts;
    std::string compare_out;
    auto *compare_cmd = app.add_subcommand("compare", "Compare Q_TLS across cohorts");
    compare_cmd->add_option("--cohort", cohorts, "label=summary.csv or label=v1,v2,...")
        ->required();
    compare_cmd->add_option("--output-dir", compare_out, "write comparison CSV and SVG here");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return 2;
    }

    try
    {
        if (*design_cmd)
            return run_design(design);
        if (*analyze_cmd)
            return run_analyze(config_path, analyze_out);
        if (*synth_cmd)
            return run_synth(synth_out, synth_seed, synth_noise, synth_format, synth_points);
        if (*compare_cmd)
            return run_compare(cohorts, compare_out);
    }
    catch (const std::exception &e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
