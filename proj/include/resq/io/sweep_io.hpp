#ifndef RESQ_IO_SWEEP_IO_HPP
#define RESQ_IO_SWEEP_IO_HPP

#include "resq/s21_model.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace resq::io
{

enum class SweepFormat
{
    CsvRealImag,  // csv-ri: frequency_hz,re_s21,im_s21
    CsvMagPhase,  // csv-magphase: frequency_hz,mag_db,phase_deg
    Touchstone,   // touchstone-s2p
};

std::string_view format_tag(SweepFormat format);
SweepFormat parse_format_tag(std::string_view tag);

struct SweepFileHeader
{
    std::string resonator_id;
    std::optional<double> power_dbm;
    std::optional<double> temperature_mk;
    SweepFormat format = SweepFormat::CsvRealImag;
};

SweepFileHeader header_of(const ComplexSweep &sweep);

// CSV sweeps. '#' lines carry key=value metadata (resonator_id, power_dbm,
// temperature_mk, format). An optional column-name row selects the schema;
// otherwise `format` metadata decides, defaulting to csv-ri. LF and CRLF
// line endings are accepted.
ComplexSweep parse_csv_sweep_text(std::string_view text, const std::string &source = "<memory>");
ComplexSweep parse_csv_sweep(const std::filesystem::path &path);

// Touchstone v1 two-port. Metadata may ride in '!' comments as key=value.
ComplexSweep parse_touchstone_text(std::string_view text, const std::string &source = "<memory>");
ComplexSweep parse_touchstone(const std::filesystem::path &path);

/// Dispatches on extension: .csv, .s2p / .ts (Touchstone), .s1p rejected.
ComplexSweep load_sweep(const std::filesystem::path &path);

/// Best-effort resonator id without a full parse; falls back to the file stem.
std::string peek_resonator_id(const std::filesystem::path &path);

std::string format_csv_sweep(const ComplexSweep &sweep, SweepFormat format);
std::string format_touchstone(const ComplexSweep &sweep);
void write_sweep(const std::filesystem::path &path, const ComplexSweep &sweep, SweepFormat format);

std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, std::string_view text);

} // namespace resq::io

#endif
