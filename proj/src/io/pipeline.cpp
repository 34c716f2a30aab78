#include "resq/io/pipeline.hpp"

#include "resq/errors.hpp"
#include "resq/io/plots.hpp"
#include "resq/io/sweep_io.hpp"
#include "resq/resonance_fit.hpp"

#include <atomic>
#include <functional>
#include <map>
#include <optional>
#include <thread>

namespace resq::io
{

namespace
{

struct ErrorInfo
{
    std::string kind;
    std::string stage;
    std::string message;
};

ErrorInfo describe(const std::exception &e, const std::string &fallback_stage)
{
    if (const auto *err = dynamic_cast<const Error *>(&e))
        return {std::string(to_string(err->kind())),
                err->stage().empty() ? fallback_stage : err->stage(), err->detail()};
    return {"Internal", fallback_stage, e.what()};
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)> &body)
{
    unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    if (workers <= 1)
    {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++)
                body(i);
        });
    for (std::thread &t : pool)
        t.join();
}

struct ParsedFile
{
    std::filesystem::path path;
    std::string resonator_id;
    std::optional<ComplexSweep> sweep;
    ErrorInfo error;
};

struct FitSlot
{
    std::optional<ResonanceFit> fit;
    ErrorInfo error;
};

} // namespace

std::string file_safe(const std::string &id)
{
    std::string out;
    for (char c : id)
    {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '.' || c == '_' || c == '-';
        out += ok ? c : '_';
    }
    return out.empty() ? "_" : out;
}

std::vector<ResonatorOutcome> analyze_files(const std::vector<std::filesystem::path> &files,
                                            const RunConfig &config)
{
    std::vector<ParsedFile> parsed(files.size());
    parallel_for(files.size(), config.threads, [&](std::size_t i) {
        ParsedFile &pf = parsed[i];
        pf.path = files[i];
        try
        {
            ComplexSweep sweep = load_sweep(files[i]);
            if (!sweep.has_power)
                throw Error(ErrorKind::MetadataMissing,
                            files[i].string() + ": no power_dbm metadata", "parse");
            sweep.validate();
            pf.resonator_id = header_of(sweep).resonator_id;
            if (pf.resonator_id.empty())
                pf.resonator_id = files[i].stem().string();
            pf.sweep = std::move(sweep);
        }
        catch (const std::exception &e)
        {
            pf.resonator_id = peek_resonator_id(files[i]);
            pf.error = describe(e, "parse");
        }
    });

    // Group by resonator id; within a resonator keep sorted file order.
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < parsed.size(); ++i)
        groups[parsed[i].resonator_id].push_back(i);

    std::vector<FitSlot> fits(parsed.size());
    parallel_for(parsed.size(), config.threads, [&](std::size_t i) {
        if (!parsed[i].sweep)
            return;
        try
        {
            fits[i].fit = fit_resonance(*parsed[i].sweep);
        }
        catch (const std::exception &e)
        {
            fits[i].error = describe(e, "fit_resonance");
        }
    });

    std::vector<ResonatorOutcome> outcomes;
    for (const auto &[id, members] : groups)
    {
        ResonatorOutcome out;
        out.resonator_id = id;
        for (std::size_t i : members)
            out.files.push_back(parsed[i].path.string());

        const ParsedFile *bad = nullptr;
        for (std::size_t i : members)
            if (!parsed[i].sweep)
            {
                bad = &parsed[i];
                break;
            }
        if (bad)
        {
            out.error_kind = bad->error.kind;
            out.error_stage = bad->error.stage;
            out.error_message = bad->error.message;
            outcomes.push_back(std::move(out));
            continue;
        }

        std::vector<SourceFit> accepted;
        std::vector<RejectedPoint> failed;
        for (std::size_t i : members)
        {
            const double p = parsed[i].sweep->power_dbm_at_source;
            if (fits[i].fit)
                accepted.push_back({p, *fits[i].fit, parsed[i].path.string()});
            else
                failed.push_back({p, parsed[i].path.string(),
                                  fits[i].error.kind + ": " + fits[i].error.message});
        }

        std::string stage = "build_power_series";
        try
        {
            out.series = build_power_series(accepted, config.budget, id, config.fit_gates.resonance);
            out.series.rejected.insert(out.series.rejected.end(), failed.begin(), failed.end());
            out.has_series = true;
            if (out.series.points.size() < config.fit_gates.min_series_points)
                throw Error(ErrorKind::InsufficientSeries,
                            "resonator " + id + " has " + std::to_string(out.series.points.size()) +
                                " accepted fits, configured minimum is " +
                                std::to_string(config.fit_gates.min_series_points));
            stage = "fit_tls";
            out.tls = fit_tls(out.series);
            stage = "decompose_loss";
            out.at_zero = decompose_loss(out.tls, 0.0);
            out.at_one = decompose_loss(out.tls, 1.0);
            out.ok = out.tls.converged;
        }
        catch (const std::exception &e)
        {
            const ErrorInfo info = describe(e, stage);
            out.ok = false;
            out.error_kind = info.kind;
            out.error_stage = info.stage;
            out.error_message = info.message;
            if (!out.has_series && !failed.empty())
                out.error_message += " (" + std::to_string(failed.size()) + " sweep fits failed, first: " +
                                     failed.front().reason + ")";
        }
        outcomes.push_back(std::move(out));
    }
    return outcomes;
}

PipelineResult run_pipeline(const RunConfig &config)
{
    PipelineResult result;
    const std::vector<std::filesystem::path> files = expand_globs(config);
    if (files.empty())
    {
        result.exit_code = 2;
        result.message = "no input files matched data_globs";
        return result;
    }
    const std::filesystem::path out_dir =
        config.output_dir.is_relative() ? config.base_dir / config.output_dir : config.output_dir;
    try
    {
        prepare_output_dir(out_dir);
    }
    catch (const Error &e)
    {
        result.exit_code = 2;
        result.message = e.what();
        return result;
    }

    result.outcomes = analyze_files(files, config);

    auto emit = [&](const std::string &name, const std::string &text) {
        const std::filesystem::path path = out_dir / name;
        write_text_file(path, text);
        result.written.push_back(path);
    };

    std::vector<double> q_tls_values;
    for (const ResonatorOutcome &o : result.outcomes)
    {
        emit("fit_" + file_safe(o.resonator_id) + ".json",
             resonator_report_json(o, config.budget, config.cohort_label));
        if (o.has_series)
            emit("decomposition_" + file_safe(o.resonator_id) + ".svg", plot_decomposition(o));
        if (o.ok)
            q_tls_values.push_back(o.tls.q_tls);
    }
    emit("summary.csv", summary_csv(result.outcomes));
    emit("errors.csv", errors_csv(result.outcomes));
    emit("qi_vs_nbar.svg", plot_qi_vs_nbar(result.outcomes));
    emit("loss_fractions.svg", plot_loss_fractions(result.outcomes));
    if (!q_tls_values.empty())
    {
        const CohortSummary cohort = make_cohort_summary(config.cohort_label, q_tls_values);
        emit("cohort_qtls.svg", plot_cohort_qtls(std::span<const CohortSummary>(&cohort, 1)));
    }

    std::size_t failures = 0;
    for (const ResonatorOutcome &o : result.outcomes)
        failures += o.ok ? 0 : 1;
    result.exit_code = failures == 0 ? 0 : 1;
    result.message = std::to_string(result.outcomes.size() - failures) + " of " +
                     std::to_string(result.outcomes.size()) + " resonators analysed";
    if (failures)
        result.message += "\n" + error_table(result.outcomes);
    return result;
}

} // namespace resq::io
