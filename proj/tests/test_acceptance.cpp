// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "resq/core.hpp"
#include "resq/errors.hpp"
#include "resq/io/config.hpp"
#include "resq/io/pipeline.hpp"
#include "resq/io/report.hpp"
#include "resq/io/sweep_io.hpp"
#include "resq/io/synth.hpp"
#include "resq/power_analysis.hpp"
#include "resq/resonance_fit.hpp"
#include "resq/tls_analysis.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#ifndef RESQ_CLI_PATH
#error "RESQ_CLI_PATH must name the resq executable"
#endif

using namespace resq;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace
{

// Pinned tolerances.
constexpr double kZ0Target = 47.9, kZ0Tol = 0.1;
constexpr double kEpsTarget = 6.34, kEpsTol = 0.01;
constexpr double kDesignMaxSeconds = 1.0;
constexpr double kQiAtOneTarget = 2.27e6, kQiAtOneRelTol = 0.005, kQiNearSingleCeiling = 2.4e6;
constexpr double kGridRelTol = 1e-5;
constexpr double kNoisyQiRelTol = 0.15;
constexpr double kNoisyMaxRatio = 100.0;
constexpr double kFitMaxSeconds = 120.0;
constexpr double kTlsQ0Tol = 0.10, kTlsQtlsTol = 0.20, kTlsNcTol = 0.50;
constexpr double kTlsMaxSeconds = 30.0;
constexpr double kRrsdExactMax = 1e-9, kRrsdRelBand = 0.30;
constexpr double kFractionTol = 0.05;
constexpr double kMultiChipNoise = 3e-4;
constexpr int kMultiChipSeeds = 10;
constexpr double kCohortRatioTarget = 1.52, kCohortRatioTol = 0.01;
constexpr double kShiftRelTol = 1e-12;

constexpr double kQ0 = 2.88e6, kQtls = 1.07e7, kNc = 1.72e3;

struct Outcome
{
    bool pass = false;
    std::string detail;
};

std::string fmt(const char *f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int run_command(const std::string &cmd, std::string *output = nullptr)
{
    FILE *pipe = ::popen((cmd + " 2>&1").c_str(), "r");
    if (!pipe)
        return -1;
    std::string out;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe))
        out.append(buf, n);
    const int status = ::pclose(pipe);
    if (output)
        *output = out;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

double field(const std::string &text, const std::string &key)
{
    std::istringstream in(text);
    std::string name;
    double value = std::nan("");
    std::string line;
    while (std::getline(in, line))
    {
        std::istringstream ls(line);
        if (ls >> name && name == key && (ls >> value))
            return value;
    }
    return std::nan("");
}

const fs::path &work_dir()
{
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "resq_acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

const fs::path &bundled_chip()
{
    static const fs::path chip = [] {
        const fs::path d = work_dir() / "chip";
        run_command(std::string(RESQ_CLI_PATH) + " synth --out-dir " + d.string());
        return d;
    }();
    return chip;
}

double rel(double a, double b)
{
    return std::abs(a - b) / std::abs(b);
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

ComplexSweep grid_sweep(double qi, double qe, double theta, double noise, std::uint64_t seed)
{
    const double ql = 1.0 / (1.0 / qi + std::cos(theta) / qe);
    const ResonanceParams p{5.5e9, ql, qe, theta};
    const BackgroundParams bg{-3.0, 2e-7, 0.4, 40e-9, p.f_r};
    return synthesize_sweep(p, bg, centered_window(p.f_r, ql, 5.0, 201), noise, seed);
}

std::vector<TlsPoint> r5_series(double noise, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<TlsPoint> pts;
    for (int i = 0; i < 12; ++i)
    {
        const double nb = std::pow(10.0, 6.0 * i / 11.0);
        const double loss = tls_model(nb, kQ0, kQtls, kNc) * (1.0 + noise * g(rng));
        pts.push_back({nb, 1.0 / loss, noise > 0 ? noise / loss : 0.0});
    }
    return pts;
}

Outcome ac1_design()
{
    const auto t0 = Clock::now();
    std::string out;
    const int rc = run_command(std::string(RESQ_CLI_PATH) +
                                   " design --s 15e-6 --g 7.5e-6 --eps-r 11.68",
                               &out);
    const double dt = seconds_since(t0);
    const double z0 = field(out, "z0");
    const double eps = field(out, "eps_eff");
    const bool ok = rc == 0 && std::abs(z0 - kZ0Target) <= kZ0Tol &&
                    std::abs(eps - kEpsTarget) <= kEpsTol && dt < kDesignMaxSeconds;
    return {ok, fmt("z0=%.4f ohm eps_eff=%.4f runtime=%.3fs", z0, eps, dt)};
}

Outcome ac2_budget()
{
    const AttenuationBudget b = reference_input_line();
    const std::vector<double> expected{62.0, 0.35, 2.0, 3.0, 2.0};
    bool items = b.items.size() == expected.size();
    for (std::size_t i = 0; items && i < expected.size(); ++i)
        items = b.items[i].loss_db == expected[i];
    const bool ok = items && b.total_db() == 69.35 && b.used_db() == 69.0;
    return {ok, fmt("total=%.17g dB used=%.17g dB", b.total_db(), b.used_db())};
}

Outcome ac3_single_photon()
{
    const double qi = 1.0 / tls_model(1.0, kQ0, kQtls, kNc);
    const bool ok = rel(qi, kQiAtOneTarget) <= kQiAtOneRelTol && qi <= kQiNearSingleCeiling;
    return {ok, fmt("Qi(n=1)=%.6g (target %.3g +/- %.1f%%)", qi, kQiAtOneTarget, 100 * kQiAtOneRelTol)};
}

Outcome ac4_resonance_roundtrip()
{
    const auto t0 = Clock::now();
    double worst_clean = 0.0;
    int clean_failures = 0;
    const double qis[] = {1e5, 1e6, 1e7}, qes[] = {3e4, 1e5, 3e5}, thetas[] = {-0.2, 0.0, 0.2};
    for (double qi : qis)
        for (double qe : qes)
            for (double th : thetas)
            {
                try
                {
                    const ResonanceFit f = fit_resonance(grid_sweep(qi, qe, th, 0.0, 1));
                    const double ql = 1.0 / (1.0 / qi + std::cos(th) / qe);
                    worst_clean = std::max({worst_clean, rel(f.params.f_r, 5.5e9),
                                            rel(f.params.q_loaded, ql),
                                            rel(f.params.q_external_mag, qe),
                                            std::abs(f.params.theta - th), rel(f.q_internal, qi)});
                }
                catch (const Error &)
                {
                    ++clean_failures;
                }
            }

    int noisy_total = 0, noisy_ok = 0;
    double worst_noisy = 0.0;
    for (double qi : qis)
        for (double qe : qes)
            for (double th : thetas)
            {
                if (qi / qe > kNoisyMaxRatio)
                    continue;
                for (std::uint64_t seed = 1; seed <= 100; ++seed)
                {
                    ++noisy_total;
                    try
                    {
                        const ResonanceFit f = fit_resonance(grid_sweep(qi, qe, th, 1e-3, seed));
                        const double e = rel(f.q_internal, qi);
                        worst_noisy = std::max(worst_noisy, e);
                        noisy_ok += e <= kNoisyQiRelTol;
                    }
                    catch (const Error &)
                    {
                    }
                }
            }
    const double dt = seconds_since(t0);
    const bool ok = clean_failures == 0 && worst_clean <= kGridRelTol && noisy_ok == noisy_total &&
                    dt < kFitMaxSeconds;
    return {ok, fmt("zero-noise worst rel err=%.2e (%d failures); noisy Qi within 15%%: %d/%d "
                    "(worst %.3f); runtime=%.1fs",
                    worst_clean, clean_failures, noisy_ok, noisy_total, worst_noisy, dt)};
}

Outcome ac5_tls_roundtrip()
{
    const auto t0 = Clock::now();
    std::vector<double> q0, qt, nc;
    int failures = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed)
    {
        try
        {
            const TlsFit f = fit_tls(r5_series(0.02, seed));
            q0.push_back(f.q0);
            qt.push_back(f.q_tls);
            nc.push_back(f.n_c);
        }
        catch (const Error &)
        {
            ++failures;
        }
    }
    const double dt = seconds_since(t0);
    if (q0.empty())
        return {false, "no TLS fit converged"};
    const double e0 = rel(median(q0), kQ0), et = rel(median(qt), kQtls), en = rel(median(nc), kNc);
    const bool ok = failures == 0 && e0 <= kTlsQ0Tol && et <= kTlsQtlsTol && en <= kTlsNcTol &&
                    dt < kTlsMaxSeconds;
    return {ok, fmt("median rel err q0=%.3f q_tls=%.3f n_c=%.3f, %d failures, runtime=%.2fs", e0, et,
                    en, failures, dt)};
}

Outcome ac6_rrsd()
{
    const TlsFit exact = fit_tls(r5_series(0.0, 1));
    double mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed)
        mean += fit_tls(r5_series(0.02, seed)).rrsd_percent / 100.0;
    const bool ok = exact.rrsd_percent <= kRrsdExactMax && std::abs(mean - 2.0) <= kRrsdRelBand * 2.0;
    return {ok, fmt("exact RRSD=%.2e%%, mean RRSD at 2%% noise=%.3f%%", exact.rrsd_percent, mean)};
}

double worst_fraction_error(const fs::path &chip_dir, int *resonators)
{
    const io::RunConfig cfg = io::load_run_config(chip_dir / "run.json");
    const auto outcomes = io::analyze_files(io::expand_globs(cfg), cfg);
    const auto truth = nlohmann::json::parse(io::read_text_file(chip_dir / "truth.json"));
    std::map<std::string, double> expected;
    for (const auto &r : truth["resonators"])
        expected[r["resonator_id"].get<std::string>()] = r["frac_tls_lowpower"].get<double>();
    double worst = 0.0;
    int count = 0;
    for (const io::ResonatorOutcome &o : outcomes)
    {
        if (!o.ok)
            return 1.0;
        ++count;
        worst = std::max(worst, std::abs(o.at_zero.fraction_tls - expected.at(o.resonator_id)));
    }
    *resonators = count;
    return count == static_cast<int>(expected.size()) ? worst : 1.0;
}

Outcome ac7_decomposition()
{
    int n = 0;
    const double bundled = worst_fraction_error(bundled_chip(), &n);
    bool ok = bundled <= kFractionTol && n == 8;
    double worst_low = 0.0;
    for (int seed = 1; seed <= kMultiChipSeeds; ++seed)
    {
        io::SynthOptions opt;
        opt.seed = seed;
        opt.noise = kMultiChipNoise;
        const fs::path dir = work_dir() / ("chip_lownoise_" + std::to_string(seed));
        io::write_synthetic_chip(dir, opt);
        int m = 0;
        worst_low = std::max(worst_low, worst_fraction_error(dir, &m));
        ok = ok && m == 8;
    }
    ok = ok && worst_low <= kFractionTol;
    return {ok, fmt("bundled chip (noise 1e-3) worst |dfrac|=%.4f over %d resonators; "
                    "%d chips at noise %.0e worst |dfrac|=%.4f",
                    bundled, n, kMultiChipSeeds, kMultiChipNoise, worst_low)};
}

Outcome ac8_cohorts()
{
    const std::vector<CohortSummary> cohorts{
        make_cohort_summary("Nb", {2.3e6}),
        make_cohort_summary("fresh", {4e6, 7e6, 1e7}),
        make_cohort_summary("aged", {3.5e6}),
    };
    const CohortComparison cmp = compare_cohorts(cohorts);
    const bool order = cmp.ordered[0].cohort_label == "fresh" &&
                       cmp.ordered[1].cohort_label == "aged" && cmp.ordered[2].cohort_label == "Nb";
    const double ratio = cmp.ratio("aged", "Nb");
    const bool ok = order && std::abs(ratio - kCohortRatioTarget) <= kCohortRatioTol;
    return {ok, fmt("ordering %s > %s > %s, aged/Nb=%.4f", cmp.ordered[0].cohort_label.c_str(),
                    cmp.ordered[1].cohort_label.c_str(), cmp.ordered[2].cohort_label.c_str(), ratio)};
}

Outcome ac9_calibration_shift()
{
    io::RunConfig cfg = io::load_run_config(bundled_chip() / "run.json");
    const auto files = io::expand_globs(cfg);
    const auto base = io::analyze_files(files, cfg);
    double worst_nbar = 0.0;
    bool qi_same = true, all_ok = true;
    for (double delta : {3.0, -3.0})
    {
        io::RunConfig shifted = cfg;
        shifted.budget.used_db_override = cfg.budget.used_db() + delta;
        const auto out = io::analyze_files(files, shifted);
        for (std::size_t r = 0; r < base.size(); ++r)
        {
            all_ok = all_ok && base[r].has_series && out[r].has_series &&
                     base[r].series.points.size() == out[r].series.points.size();
            if (!all_ok)
                break;
            for (std::size_t i = 0; i < base[r].series.points.size(); ++i)
            {
                const PowerPoint &a = base[r].series.points[i];
                const PowerPoint &b = out[r].series.points[i];
                worst_nbar = std::max(worst_nbar, rel(b.n_bar / a.n_bar, std::pow(10.0, -delta / 10.0)));
                qi_same = qi_same && a.q_internal == b.q_internal && a.source == b.source;
            }
        }
    }
    const bool ok = all_ok && qi_same && worst_nbar <= kShiftRelTol;
    return {ok, fmt("worst n_bar ratio error=%.2e, Qi unchanged=%s", worst_nbar, qi_same ? "yes" : "no")};
}

Outcome ac10_determinism()
{
    const fs::path chip = bundled_chip();
    const std::string cli = RESQ_CLI_PATH;
    const fs::path a = work_dir() / "run_a", b = work_dir() / "run_b";
    const int ra = run_command(cli + " analyze --config " + (chip / "run.json").string() +
                               " --output-dir " + a.string());
    const int rb = run_command(cli + " analyze --config " + (chip / "run.json").string() +
                               " --output-dir " + b.string());
    std::size_t files = 0, svg = 0, json = 0, differing = 0;
    for (const auto &entry : fs::directory_iterator(a))
    {
        const fs::path other = b / entry.path().filename();
        ++files;
        svg += entry.path().extension() == ".svg";
        json += entry.path().extension() == ".json";
        if (!fs::exists(other) || io::read_text_file(entry.path()) != io::read_text_file(other))
            ++differing;
    }
    std::size_t files_b = 0;
    for (const auto &entry : fs::directory_iterator(b))
        files_b += entry.is_regular_file();
    const bool ok = ra == 0 && rb == 0 && files == files_b && differing == 0 && svg > 0 &&
                    json == 8 && fs::exists(a / "summary.csv");
    return {ok, fmt("exit %d/%d, %zu files compared (%zu JSON, %zu SVG), %zu differ", ra, rb, files,
                    json, svg, differing)};
}

} // namespace

int main()
{
    const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria{
        {"AC1 CPW design Z0 and eps_eff", ac1_design},
        {"AC2 attenuation budget", ac2_budget},
        {"AC3 single-photon Qi", ac3_single_photon},
        {"AC4 resonance-fit round trip", ac4_resonance_roundtrip},
        {"AC5 TLS-fit round trip", ac5_tls_roundtrip},
        {"AC6 RRSD behaviour", ac6_rrsd},
        {"AC7 loss decomposition", ac7_decomposition},
        {"AC8 cohort comparison", ac8_cohorts},
        {"AC9 calibration-shift invariance", ac9_calibration_shift},
        {"AC10 end-to-end determinism", ac10_determinism},
    };
    int failed = 0;
    for (const auto &[name, check] : criteria)
    {
        Outcome o;
        try
        {
            o = check();
        }
        catch (const std::exception &e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
                criteria.size());
    return failed == 0 ? 0 : 1;
}
