#ifndef RESQ_IO_CONFIG_HPP
#define RESQ_IO_CONFIG_HPP

#include "resq/power_analysis.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace resq::io
{

struct GateConfig
{
    FitGates resonance;
    std::size_t min_series_points = 4;
};

// Run configuration, stored as JSON:
//   {
//     "data_globs": ["sweeps/*.csv"],
//     "cohort_label": "chip-A",
//     "seed": 1,
//     "output_dir": "out",
//     "threads": 0,
//     "budget": {"items": [{"label": "...", "loss_db": 62.0, "note": "..."}],
//                "used_db": 69},
//     "fit_gates": {"max_rel_sigma_qi": 0.5}
//   }
// Relative globs and output_dir resolve against the config file's directory.
struct RunConfig
{
    std::vector<std::string> data_globs;
    AttenuationBudget budget;
    std::string cohort_label = "default";
    GateConfig fit_gates;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "out";
    std::filesystem::path base_dir = ".";
    unsigned threads = 0; // 0: hardware concurrency
};

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path &base_dir);
RunConfig load_run_config(const std::filesystem::path &path);
std::string format_run_config(const RunConfig &config);

/// Applies RESQ_OUTPUT_DIR when set.
void apply_environment(RunConfig &config);

/// Creates the output directory and confirms it is writable. Throws Io.
void prepare_output_dir(const std::filesystem::path &dir);

/// Sorted, de-duplicated matches of all globs.
std::vector<std::filesystem::path> expand_globs(const RunConfig &config);

} // namespace resq::io

#endif
