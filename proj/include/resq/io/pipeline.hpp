#ifndef RESQ_IO_PIPELINE_HPP
#define RESQ_IO_PIPELINE_HPP

#include "resq/io/config.hpp"
#include "resq/io/report.hpp"

#include <string>
#include <vector>

namespace resq::io
{

struct PipelineResult
{
    int exit_code = 0; // 0 all resonators ok, 1 partial failure, 2 nothing to run
    std::string message;
    std::vector<ResonatorOutcome> outcomes; // sorted by resonator_id
    std::vector<std::filesystem::path> written;
};

/// Full batch analysis: parse, fit every sweep, build power series, fit the
/// TLS model and write fit_<id>.json, summary.csv, errors.csv and the SVG
/// figures into config.output_dir. A failure in one resonator is recorded
/// against it and never touches the others.
PipelineResult run_pipeline(const RunConfig &config);

/// Results of the analysis stage only; nothing is written.
std::vector<ResonatorOutcome> analyze_files(const std::vector<std::filesystem::path> &files,
                                            const RunConfig &config);

/// Resonator ids restricted to [A-Za-z0-9._-] for use in file names.
std::string file_safe(const std::string &id);

} // namespace resq::io

#endif
