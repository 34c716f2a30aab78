#include "resq/io/config.hpp"

#include "resq/errors.hpp"
#include "resq/io/sweep_io.hpp"

#include <json.hpp>

#include <glob.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>

namespace resq::io
{

using nlohmann::json;

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path &base_dir)
{
    json doc;
    try
    {
        doc = json::parse(json_text);
    }
    catch (const json::exception &e)
    {
        throw Error(ErrorKind::InvalidInput, std::string("config is not valid JSON: ") + e.what());
    }

    RunConfig config;
    config.base_dir = base_dir;
    try
    {
        for (const auto &g : doc.value("data_globs", json::array()))
            config.data_globs.push_back(g.get<std::string>());
        config.cohort_label = doc.value("cohort_label", config.cohort_label);
        config.seed = doc.value("seed", config.seed);
        config.output_dir = doc.value("output_dir", config.output_dir.string());
        config.threads = doc.value("threads", config.threads);

        const json &budget = doc.at("budget");
        for (const auto &item : budget.at("items"))
            config.budget.items.push_back({item.at("label").get<std::string>(),
                                           item.at("loss_db").get<double>(),
                                           item.value("note", std::string())});
        if (budget.contains("used_db") && !budget["used_db"].is_null())
            config.budget.used_db_override = budget["used_db"].get<double>();

        if (doc.contains("fit_gates"))
        {
            const json &gates = doc["fit_gates"];
            config.fit_gates.resonance.max_rel_sigma_qi =
                gates.value("max_rel_sigma_qi", config.fit_gates.resonance.max_rel_sigma_qi);
            config.fit_gates.min_series_points =
                gates.value("min_series_points", config.fit_gates.min_series_points);
        }
    }
    catch (const json::exception &e)
    {
        throw Error(ErrorKind::InvalidInput, std::string("config field error: ") + e.what());
    }
    config.budget.validate();
    return config;
}

RunConfig load_run_config(const std::filesystem::path &path)
{
    const std::filesystem::path base = path.has_parent_path() ? path.parent_path() : ".";
    return parse_run_config(read_text_file(path), base);
}

std::string format_run_config(const RunConfig &config)
{
    json doc;
    doc["data_globs"] = config.data_globs;
    doc["cohort_label"] = config.cohort_label;
    doc["seed"] = config.seed;
    doc["output_dir"] = config.output_dir.string();
    json items = json::array();
    for (const BudgetItem &item : config.budget.items)
        items.push_back({{"label", item.label}, {"loss_db", item.loss_db}, {"note", item.note}});
    doc["budget"]["items"] = items;
    if (config.budget.used_db_override)
        doc["budget"]["used_db"] = *config.budget.used_db_override;
    doc["fit_gates"]["max_rel_sigma_qi"] = config.fit_gates.resonance.max_rel_sigma_qi;
    doc["fit_gates"]["min_series_points"] = config.fit_gates.min_series_points;
    return doc.dump(2) + "\n";
}

void apply_environment(RunConfig &config)
{
    if (const char *dir = std::getenv("RESQ_OUTPUT_DIR"); dir && *dir)
        config.output_dir = dir;
}

void prepare_output_dir(const std::filesystem::path &dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw Error(ErrorKind::Io, "cannot create output directory " + dir.string() + ": " +
                                       ec.message());
    const std::filesystem::path probe = dir / ".resq_write_probe";
    {
        std::ofstream out(probe);
        if (!out)
            throw Error(ErrorKind::Io, "output directory " + dir.string() + " is not writable");
    }
    std::filesystem::remove(probe, ec);
}

std::vector<std::filesystem::path> expand_globs(const RunConfig &config)
{
    std::vector<std::filesystem::path> out;
    for (const std::string &pattern : config.data_globs)
    {
        std::filesystem::path full = pattern;
        if (full.is_relative())
            full = config.base_dir / full;
        glob_t matches{};
        if (::glob(full.string().c_str(), 0, nullptr, &matches) == 0)
        {
            for (std::size_t i = 0; i < matches.gl_pathc; ++i)
                out.emplace_back(matches.gl_pathv[i]);
        }
        ::globfree(&matches);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace resq::io
