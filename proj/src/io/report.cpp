#include "resq/io/report.hpp"

#include "resq/errors.hpp"
#include "resq/resonance_fit.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>

namespace resq::io
{

using nlohmann::ordered_json;

double round9(double value)
{
    if (!std::isfinite(value))
        return value;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return std::strtod(buf, nullptr);
}

std::string fmt9(double value)
{
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

namespace
{

ordered_json num(double v)
{
    if (!std::isfinite(v))
        return nullptr;
    return round9(v);
}

std::string base_name(const std::string &path)
{
    return std::filesystem::path(path).filename().string();
}

std::string csv_field(const std::string &s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s)
    {
        if (c == '"')
            out += '"';
        out += (c == '\n' || c == '\r') ? ' ' : c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string &line)
{
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i)
    {
        const char c = line[i];
        if (quoted)
        {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"')
                cur += '"', ++i;
            else if (c == '"')
                quoted = false;
            else
                cur += c;
        }
        else if (c == '"')
            quoted = true;
        else if (c == ',')
            out.push_back(cur), cur.clear();
        else
            cur += c;
    }
    out.push_back(cur);
    return out;
}

} // namespace

std::string resonator_report_json(const ResonatorOutcome &o, const AttenuationBudget &budget,
                                  const std::string &cohort_label)
{
    ordered_json doc;
    doc["resonator_id"] = o.resonator_id;
    doc["cohort_label"] = cohort_label;
    doc["status"] = o.ok ? "ok" : "failed";
    if (!o.ok)
    {
        doc["error_kind"] = o.error_kind;
        doc["error_stage"] = o.error_stage;
        doc["error_message"] = o.error_message;
    }
    doc["budget_total_db"] = num(budget.total_db());
    doc["budget_used_db"] = num(budget.used_db());
    doc["qi_convention"] = kQiConvention;
    doc["background_model"] = kBackgroundModel;
    doc["resonance_method"] = kResonanceMethodTag;

    if (o.has_series)
        doc["f_r_hz"] = num(o.series.f_r_median);
    if (o.ok)
    {
        const TlsFit &t = o.tls;
        doc["q0"] = num(t.q0);
        doc["q_tls"] = num(t.q_tls);
        doc["n_c"] = num(t.n_c);
        doc["sigma_q0"] = num(t.sigma.at("q0"));
        doc["sigma_q_tls"] = num(t.sigma.at("q_tls"));
        doc["sigma_n_c"] = num(t.sigma.at("n_c"));
        doc["inv_q0"] = num(1.0 / t.q0);
        doc["inv_q_tls"] = num(1.0 / t.q_tls);
        doc["sigma_inv_q0"] = num(t.sigma.at("inv_q0"));
        doc["sigma_inv_q_tls"] = num(t.sigma.at("inv_q_tls"));
        doc["rrsd_percent"] = num(t.rrsd_percent);
        doc["mean_residual_percent"] = num(t.mean_residual_percent);
        doc["frac_tls_lowpower"] = num(t.frac_tls_lowpower);
        doc["frac_background_lowpower"] = num(t.frac_background_lowpower);
        doc["loss_background_nbar0"] = num(o.at_zero.background);
        doc["loss_tls_nbar0"] = num(o.at_zero.tls);
        doc["frac_tls_nbar0"] = num(o.at_zero.fraction_tls);
        doc["loss_background_nbar1"] = num(o.at_one.background);
        doc["loss_tls_nbar1"] = num(o.at_one.tls);
        doc["frac_tls_nbar1"] = num(o.at_one.fraction_tls);
        doc["q_internal_nbar1"] = num(1.0 / (o.at_one.background + o.at_one.tls));
        doc["tls_converged"] = t.converged;
        doc["insufficient_dynamic_range"] = t.insufficient_dynamic_range;
        doc["degenerate_n_c"] = t.degenerate_n_c;
        doc["tls_iterations"] = t.iterations;
        doc["n_points"] = t.n_points;
    }

    ordered_json points = ordered_json::array();
    ordered_json rejected = ordered_json::array();
    if (o.has_series)
    {
        for (const PowerPoint &p : o.series.points)
        {
            ordered_json row;
            row["source"] = base_name(p.source);
            row["p_source_dbm"] = num(p.p_source_dbm);
            row["p_chip_dbm"] = num(p.p_chip_dbm);
            row["n_bar"] = num(p.n_bar);
            row["f_r_hz"] = num(p.fit.params.f_r);
            row["q_loaded"] = num(p.fit.params.q_loaded);
            row["q_external_mag"] = num(p.fit.params.q_external_mag);
            row["theta_rad"] = num(p.fit.params.theta);
            row["q_internal"] = num(p.q_internal);
            row["sigma_q_internal"] = num(p.sigma_q_internal);
            row["cable_delay_s"] = num(p.fit.background.cable_delay_tau);
            row["residual_rms"] = num(p.fit.residual_rms);
            row["fit_iterations"] = p.fit.iterations;
            points.push_back(row);
        }
        for (const RejectedPoint &r : o.series.rejected)
        {
            ordered_json row;
            row["source"] = base_name(r.source);
            row["p_source_dbm"] = num(r.p_source_dbm);
            row["reason"] = r.reason;
            rejected.push_back(row);
        }
    }
    doc["points"] = points;
    doc["rejected"] = rejected;
    ordered_json files = ordered_json::array();
    for (const std::string &f : o.files)
        files.push_back(base_name(f));
    doc["files"] = files;
    return doc.dump(2) + "\n";
}

std::string summary_csv(std::span<const ResonatorOutcome> outcomes)
{
    std::string out = "resonator_id,f_r_hz,q0,q_tls,n_c,rrsd_percent,frac_tls_lowpower\n";
    for (const ResonatorOutcome &o : outcomes)
    {
        if (!o.ok)
            continue;
        out += csv_field(o.resonator_id) + ',' + fmt9(o.series.f_r_median) + ',' + fmt9(o.tls.q0) +
               ',' + fmt9(o.tls.q_tls) + ',' + fmt9(o.tls.n_c) + ',' + fmt9(o.tls.rrsd_percent) +
               ',' + fmt9(o.tls.frac_tls_lowpower) + '\n';
    }
    return out;
}

std::string errors_csv(std::span<const ResonatorOutcome> outcomes)
{
    std::string out = "resonator_id,error_kind,stage,message\n";
    for (const ResonatorOutcome &o : outcomes)
        if (!o.ok)
            out += csv_field(o.resonator_id) + ',' + csv_field(o.error_kind) + ',' +
                   csv_field(o.error_stage) + ',' + csv_field(o.error_message) + '\n';
    return out;
}

std::string error_table(std::span<const ResonatorOutcome> outcomes)
{
    std::ostringstream os;
    char line[512];
    std::snprintf(line, sizeof line, "%-16s %-24s %-16s %s\n", "resonator", "error", "stage",
                  "message");
    os << line;
    for (const ResonatorOutcome &o : outcomes)
    {
        if (o.ok)
            continue;
        std::snprintf(line, sizeof line, "%-16s %-24s %-16s %s\n", o.resonator_id.c_str(),
                      o.error_kind.c_str(), o.error_stage.c_str(), o.error_message.c_str());
        os << line;
    }
    return os.str();
}

std::vector<SummaryRow> parse_summary_csv(std::string_view text)
{
    std::vector<SummaryRow> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    bool header = true;
    std::size_t line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (header)
        {
            header = false;
            if (cells.size() != 7 || cells[0] != "resonator_id" || cells[3] != "q_tls")
                throw Error(ErrorKind::MalformedSweep, "summary header not recognised");
            continue;
        }
        if (cells.size() != 7)
            throw Error(ErrorKind::MalformedSweep,
                        "summary line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " columns");
        SummaryRow row;
        row.resonator_id = cells[0];
        double *fields[] = {&row.f_r_hz, &row.q0, &row.q_tls, &row.n_c, &row.rrsd_percent,
                            &row.frac_tls_lowpower};
        for (std::size_t i = 0; i < 6; ++i)
        {
            char *end = nullptr;
            *fields[i] = std::strtod(cells[i + 1].c_str(), &end);
            if (end == cells[i + 1].c_str())
                throw Error(ErrorKind::MalformedSweep,
                            "summary line " + std::to_string(line_no) + ": bad number");
        }
        rows.push_back(row);
    }
    if (header)
        throw Error(ErrorKind::MalformedSweep, "summary is empty");
    return rows;
}

std::string cohort_comparison_csv(const CohortComparison &c)
{
    std::string out = "cohort_label,n,mean_q_tls,min_q_tls,max_q_tls";
    for (const CohortSummary &s : c.ordered)
        out += ",ratio_to_" + csv_field(s.cohort_label);
    out += '\n';
    for (std::size_t i = 0; i < c.ordered.size(); ++i)
    {
        const CohortSummary &s = c.ordered[i];
        out += csv_field(s.cohort_label) + ',' + std::to_string(s.q_tls_values.size()) + ',' +
               fmt9(s.mean_q_tls) + ',' + fmt9(s.min_q_tls) + ',' + fmt9(s.max_q_tls);
        for (std::size_t j = 0; j < c.ordered.size(); ++j)
            out += ',' + fmt9(c.mean_ratio[i][j]);
        out += '\n';
    }
    return out;
}

} // namespace resq::io
