#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "resq/io/config.hpp"
#include "resq/io/pipeline.hpp"
#include "resq/io/report.hpp"
#include "resq/io/sweep_io.hpp"
#include "resq/io/synth.hpp"

#include <filesystem>
#include <map>

using namespace resq;
using namespace resq::io;
namespace fs = std::filesystem;

namespace
{

fs::path fresh_chip(const std::string &name, SweepFormat format = SweepFormat::CsvRealImag)
{
    const fs::path dir = fs::temp_directory_path() / ("resq_pipe_" + name);
    fs::remove_all(dir);
    SynthOptions opt;
    opt.format = format;
    write_synthetic_chip(dir, opt);
    return dir;
}

std::map<std::string, std::string> read_outputs(const fs::path &dir)
{
    std::map<std::string, std::string> out;
    for (const auto &entry : fs::directory_iterator(dir))
        out[entry.path().filename().string()] = read_text_file(entry.path());
    return out;
}

} // namespace

TEST_CASE("synthetic chip end to end")
{
    const fs::path dir = fresh_chip("e2e");
    RunConfig cfg = load_run_config(dir / "run.json");
    const PipelineResult res = run_pipeline(cfg);
    CHECK(res.exit_code == 0);
    REQUIRE(res.outcomes.size() == 8);
    for (const ResonatorOutcome &o : res.outcomes)
    {
        CHECK(o.ok);
        CHECK(o.tls.converged);
        CHECK(o.series.points.size() == 11);
    }
    const auto rows = parse_summary_csv(read_text_file(dir / "out" / "summary.csv"));
    CHECK(rows.size() == 8);
    for (const char *name : {"qi_vs_nbar.svg", "loss_fractions.svg", "cohort_qtls.svg",
                             "fit_R1.json", "decomposition_R8.svg", "errors.csv"})
        CHECK(fs::exists(dir / "out" / name));
}

TEST_CASE("touchstone chip analyses too")
{
    const fs::path dir = fresh_chip("s2p", SweepFormat::Touchstone);
    const PipelineResult res = run_pipeline(load_run_config(dir / "run.json"));
    CHECK(res.exit_code == 0);
    CHECK(res.outcomes.size() == 8);
}

TEST_CASE("thread count does not change outputs")
{
    const fs::path dir = fresh_chip("threads");
    RunConfig cfg = load_run_config(dir / "run.json");
    cfg.threads = 1;
    cfg.output_dir = "serial";
    REQUIRE(run_pipeline(cfg).exit_code == 0);
    cfg.threads = 8;
    cfg.output_dir = "parallel";
    REQUIRE(run_pipeline(cfg).exit_code == 0);
    CHECK(read_outputs(dir / "serial") == read_outputs(dir / "parallel"));
}

TEST_CASE("no inputs")
{
    RunConfig cfg;
    cfg.budget = reference_input_line();
    cfg.base_dir = fs::temp_directory_path();
    CHECK(run_pipeline(cfg).exit_code == 2);
    cfg.data_globs = {"resq_nothing_matches_*.csv"};
    CHECK(run_pipeline(cfg).exit_code == 2);
}

TEST_CASE("unwritable output directory")
{
    const fs::path dir = fresh_chip("unwritable");
    RunConfig cfg = load_run_config(dir / "run.json");
    cfg.output_dir = "/proc/resq_out";
    CHECK(run_pipeline(cfg).exit_code == 2);
}

TEST_CASE("one corrupted file is isolated")
{
    const fs::path clean = fresh_chip("clean");
    REQUIRE(run_pipeline(load_run_config(clean / "run.json")).exit_code == 0);

    const fs::path dir = fresh_chip("corrupt");
    const fs::path victim = dir / "sweeps" / "R3_m050dBm.csv";
    std::string text = read_text_file(victim);
    text += "5.0e9,1\n";
    write_text_file(victim, text);

    const PipelineResult res = run_pipeline(load_run_config(dir / "run.json"));
    CHECK(res.exit_code == 1);
    REQUIRE(res.outcomes.size() == 8);
    for (const ResonatorOutcome &o : res.outcomes)
    {
        if (o.resonator_id == "R3")
        {
            CHECK_FALSE(o.ok);
            CHECK(o.error_kind == "MalformedSweep");
            CHECK(o.error_stage == "parse");
        }
        else
        {
            CHECK(o.ok);
            const std::string name = "fit_" + o.resonator_id + ".json";
            CHECK(read_text_file(dir / "out" / name) == read_text_file(clean / "out" / name));
        }
    }
    CHECK(parse_summary_csv(read_text_file(dir / "out" / "summary.csv")).size() == 7);
    CHECK(read_text_file(dir / "out" / "errors.csv").find("R3,MalformedSweep,parse,") !=
          std::string::npos);
    CHECK(res.message.find("R3") != std::string::npos);
}

TEST_CASE("sweeps without power are refused")
{
    const fs::path dir = fresh_chip("nopower", SweepFormat::Touchstone);
    const fs::path victim = dir / "sweeps" / "R5_m030dBm.s2p";
    std::string text = read_text_file(victim);
    const auto pos = text.find("power_dbm=");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 10, "power_xxx=");
    write_text_file(victim, text);
    const PipelineResult res = run_pipeline(load_run_config(dir / "run.json"));
    CHECK(res.exit_code == 1);
    for (const ResonatorOutcome &o : res.outcomes)
        if (o.resonator_id == "R5")
            CHECK(o.error_kind == "MetadataMissing");
}

TEST_CASE("too few powers")
{
    const fs::path dir = fresh_chip("few");
    for (const char *p : {"m035", "m040", "m045", "m050", "m055", "m060", "m065", "m070", "m075"})
        fs::remove(dir / "sweeps" / (std::string("R2_") + p + "dBm.csv"));
    const PipelineResult res = run_pipeline(load_run_config(dir / "run.json"));
    CHECK(res.exit_code == 1);
    for (const ResonatorOutcome &o : res.outcomes)
        if (o.resonator_id == "R2")
        {
            CHECK(o.error_kind == "InsufficientSeries");
            CHECK(o.error_stage == "build_power_series");
        }
}
