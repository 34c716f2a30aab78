#include "resq/io/sweep_io.hpp"

#include "resq/core.hpp"
#include "resq/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace resq::io
{

namespace
{

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string_view> split_lines(std::string_view text)
{
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size())
    {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        lines.push_back(line);
        start = end + 1;
    }
    return lines;
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true)
    {
        const std::size_t pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> split_ws(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size())
    {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])))
            ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])))
            ++j;
        if (j > i)
            out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::optional<double> to_double(std::string_view token)
{
    token = trim(token);
    if (!token.empty() && token.front() == '+')
        token.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || token.empty())
        return std::nullopt;
    return value;
}

double require_number(std::string_view token, const std::string &source, std::size_t line)
{
    const auto v = to_double(token);
    if (!v)
        throw Error(ErrorKind::MalformedSweep, source + ":" + std::to_string(line) +
                                                   ": not a number: '" + std::string(token) + "'");
    return *v;
}

// Accepts "key=value" fragments separated by whitespace, commas or semicolons.
void read_metadata(std::string_view body, std::map<std::string, std::string> &metadata)
{
    std::string text(body);
    std::replace(text.begin(), text.end(), ';', ' ');
    for (std::string_view token : split_ws(text))
    {
        if (!token.empty() && token.back() == ',')
            token.remove_suffix(1);
        const std::size_t eq = token.find('=');
        if (eq == std::string_view::npos || eq == 0)
            continue;
        metadata[lower(trim(token.substr(0, eq)))] = std::string(trim(token.substr(eq + 1)));
    }
}

void apply_metadata(ComplexSweep &sweep, const std::string &source, bool power_required)
{
    const auto it = sweep.metadata.find("power_dbm");
    if (it == sweep.metadata.end())
    {
        if (power_required)
            throw Error(ErrorKind::MetadataMissing, source + ": no power_dbm metadata");
        return;
    }
    const auto power = to_double(it->second);
    if (!power || !std::isfinite(*power))
        throw Error(ErrorKind::MalformedSweep, source + ": power_dbm is not a number");
    sweep.power_dbm_at_source = *power;
    sweep.has_power = true;
}

void check_monotone(const ComplexSweep &sweep, const std::string &source)
{
    if (sweep.freqs.empty())
        throw Error(ErrorKind::MalformedSweep, source + ": no data rows");
    for (std::size_t i = 1; i < sweep.freqs.size(); ++i)
        if (!(sweep.freqs[i] > sweep.freqs[i - 1]))
            throw Error(ErrorKind::MalformedSweep,
                        source + ": frequencies not strictly increasing at row " +
                            std::to_string(i + 1));
}

std::string shortest(double v)
{
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

Complex from_mag_db(double mag_db, double phase_deg)
{
    return std::polar(std::pow(10.0, mag_db / 20.0), phase_deg * kPi / 180.0);
}

} // namespace

std::string_view format_tag(SweepFormat format)
{
    switch (format)
    {
    case SweepFormat::CsvRealImag: return "csv-ri";
    case SweepFormat::CsvMagPhase: return "csv-magphase";
    case SweepFormat::Touchstone: return "touchstone-s2p";
    }
    return "csv-ri";
}

SweepFormat parse_format_tag(std::string_view tag)
{
    const std::string t = lower(trim(tag));
    if (t == "csv-ri")
        return SweepFormat::CsvRealImag;
    if (t == "csv-magphase")
        return SweepFormat::CsvMagPhase;
    if (t == "touchstone-s2p" || t == "touchstone")
        return SweepFormat::Touchstone;
    throw Error(ErrorKind::UnsupportedFormat, "unknown sweep format '" + std::string(tag) + "'");
}

SweepFileHeader header_of(const ComplexSweep &sweep)
{
    SweepFileHeader h;
    if (auto it = sweep.metadata.find("resonator_id"); it != sweep.metadata.end())
        h.resonator_id = it->second;
    if (sweep.has_power)
        h.power_dbm = sweep.power_dbm_at_source;
    if (auto it = sweep.metadata.find("temperature_mk"); it != sweep.metadata.end())
        h.temperature_mk = to_double(it->second);
    if (auto it = sweep.metadata.find("format"); it != sweep.metadata.end())
        h.format = parse_format_tag(it->second);
    return h;
}

ComplexSweep parse_csv_sweep_text(std::string_view text, const std::string &source)
{
    ComplexSweep sweep;
    std::optional<SweepFormat> format;
    std::size_t line_no = 0;
    for (std::string_view raw : split_lines(text))
    {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty())
            continue;
        if (line.front() == '#')
        {
            read_metadata(line.substr(1), sweep.metadata);
            continue;
        }
        const std::vector<std::string_view> cols = split(line, ',');
        if (cols.size() != 3)
            throw Error(ErrorKind::MalformedSweep, source + ":" + std::to_string(line_no) +
                                                       ": expected 3 columns, found " +
                                                       std::to_string(cols.size()));
        if (!to_double(cols[0]))
        {
            if (!sweep.freqs.empty() || format)
                throw Error(ErrorKind::MalformedSweep,
                            source + ":" + std::to_string(line_no) + ": unexpected header row");
            const std::string c1 = lower(cols[1]);
            const std::string c2 = lower(cols[2]);
            if (c1 == "re_s21" && c2 == "im_s21")
                format = SweepFormat::CsvRealImag;
            else if (c1 == "mag_db" && c2 == "phase_deg")
                format = SweepFormat::CsvMagPhase;
            else
                throw Error(ErrorKind::UnsupportedFormat,
                            source + ": unrecognised columns '" + std::string(line) + "'");
            continue;
        }
        if (!format)
        {
            const auto it = sweep.metadata.find("format");
            format = it == sweep.metadata.end() ? SweepFormat::CsvRealImag
                                                : parse_format_tag(it->second);
            if (*format == SweepFormat::Touchstone)
                throw Error(ErrorKind::UnsupportedFormat, source + ": Touchstone tag in a CSV file");
        }
        const double f = require_number(cols[0], source, line_no);
        const double a = require_number(cols[1], source, line_no);
        const double b = require_number(cols[2], source, line_no);
        sweep.freqs.push_back(f);
        sweep.s21.push_back(*format == SweepFormat::CsvRealImag ? Complex(a, b) : from_mag_db(a, b));
    }
    sweep.metadata["format"] = std::string(format_tag(format.value_or(SweepFormat::CsvRealImag)));
    apply_metadata(sweep, source, true);
    check_monotone(sweep, source);
    return sweep;
}

ComplexSweep parse_csv_sweep(const std::filesystem::path &path)
{
    return parse_csv_sweep_text(read_text_file(path), path.filename().string());
}

ComplexSweep parse_touchstone_text(std::string_view text, const std::string &source)
{
    ComplexSweep sweep;
    double freq_scale = 1e9; // Touchstone defaults: GHZ S MA R 50
    std::string data_format = "ma";
    bool option_seen = false;
    std::size_t line_no = 0;

    for (std::string_view raw : split_lines(text))
    {
        ++line_no;
        std::string_view line = raw;
        if (const std::size_t bang = line.find('!'); bang != std::string_view::npos)
        {
            read_metadata(line.substr(bang + 1), sweep.metadata);
            line = line.substr(0, bang);
        }
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[')
            throw Error(ErrorKind::UnsupportedFormat,
                        source + ": Touchstone 2.0 keywords are not supported");
        if (line.front() == '#')
        {
            if (option_seen)
                continue; // only the first option line counts
            option_seen = true;
            const std::vector<std::string_view> tokens = split_ws(line.substr(1));
            for (std::size_t i = 0; i < tokens.size(); ++i)
            {
                const std::string t = lower(tokens[i]);
                if (t == "hz")
                    freq_scale = 1.0;
                else if (t == "khz")
                    freq_scale = 1e3;
                else if (t == "mhz")
                    freq_scale = 1e6;
                else if (t == "ghz")
                    freq_scale = 1e9;
                else if (t == "s")
                    ;
                else if (t == "y" || t == "z" || t == "h" || t == "g")
                    throw Error(ErrorKind::UnsupportedFormat,
                                source + ": only S-parameters are supported, found " +
                                    std::string(tokens[i]));
                else if (t == "ri" || t == "ma" || t == "db")
                    data_format = t;
                else if (t == "r")
                {
                    if (i + 1 >= tokens.size() || !to_double(tokens[i + 1]))
                        throw Error(ErrorKind::UnsupportedFormat,
                                    source + ": reference impedance missing after R");
                    sweep.metadata["reference_ohms"] = std::string(tokens[++i]);
                }
                else
                    throw Error(ErrorKind::UnsupportedFormat,
                                source + ": unknown option token '" + std::string(tokens[i]) + "'");
            }
            continue;
        }

        const std::vector<std::string_view> tokens = split_ws(line);
        if (tokens.size() == 3)
            throw Error(ErrorKind::UnsupportedFormat, source + ": one-port data, S21 needs two ports");
        if (tokens.size() != 9)
            throw Error(tokens.size() > 9 && tokens.size() % 2 == 1 ? ErrorKind::UnsupportedFormat
                                                                      : ErrorKind::MalformedSweep,
                        source + ":" + std::to_string(line_no) + ": expected 9 values for a two-port row, found " +
                            std::to_string(tokens.size()));
        std::array<double, 9> v{};
        for (std::size_t i = 0; i < 9; ++i)
            v[i] = require_number(tokens[i], source, line_no);
        // Row order: f, S11, S21, S12, S22.
        const double a = v[3];
        const double b = v[4];
        Complex s21;
        if (data_format == "ri")
            s21 = Complex(a, b);
        else if (data_format == "ma")
            s21 = std::polar(a, b * kPi / 180.0);
        else
            s21 = from_mag_db(a, b);
        sweep.freqs.push_back(v[0] * freq_scale);
        sweep.s21.push_back(s21);
    }
    sweep.metadata["format"] = std::string(format_tag(SweepFormat::Touchstone));
    apply_metadata(sweep, source, false);
    check_monotone(sweep, source);
    return sweep;
}

ComplexSweep parse_touchstone(const std::filesystem::path &path)
{
    if (lower(path.extension().string()) == ".s1p")
        throw Error(ErrorKind::UnsupportedFormat, path.filename().string() + ": one-port file");
    return parse_touchstone_text(read_text_file(path), path.filename().string());
}

ComplexSweep load_sweep(const std::filesystem::path &path)
{
    const std::string ext = lower(path.extension().string());
    if (ext == ".csv")
        return parse_csv_sweep(path);
    if (ext == ".s2p" || ext == ".ts" || ext == ".s1p")
        return parse_touchstone(path);
    throw Error(ErrorKind::UnsupportedFormat, path.filename().string() + ": unknown extension");
}

std::string peek_resonator_id(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    std::string line;
    while (in && std::getline(in, line))
    {
        const std::size_t pos = line.find("resonator_id=");
        if (pos == std::string::npos)
            continue;
        std::map<std::string, std::string> meta;
        read_metadata(std::string_view(line).substr(pos), meta);
        if (auto it = meta.find("resonator_id"); it != meta.end() && !it->second.empty())
            return it->second;
    }
    return path.stem().string();
}

namespace
{
void write_metadata(std::ostringstream &out, const ComplexSweep &sweep, char marker)
{
    const auto emit = [&](const std::string &key, const std::string &value) {
        out << marker << ' ' << key << '=' << value << '\n';
    };
    if (auto it = sweep.metadata.find("resonator_id"); it != sweep.metadata.end())
        emit("resonator_id", it->second);
    if (sweep.has_power)
        emit("power_dbm", shortest(sweep.power_dbm_at_source));
    for (const auto &[key, value] : sweep.metadata)
    {
        if (key == "resonator_id" || key == "power_dbm" || key == "format" ||
            key == "reference_ohms" || value.find_first_of(" \t") != std::string::npos)
            continue;
        emit(key, value);
    }
}
} // namespace

std::string format_csv_sweep(const ComplexSweep &sweep, SweepFormat format)
{
    if (format == SweepFormat::Touchstone)
        return format_touchstone(sweep);
    std::ostringstream out;
    write_metadata(out, sweep, '#');
    out << "# format=" << format_tag(format) << '\n';
    if (format == SweepFormat::CsvRealImag)
    {
        out << "frequency_hz,re_s21,im_s21\n";
        for (std::size_t i = 0; i < sweep.size(); ++i)
            out << shortest(sweep.freqs[i]) << ',' << shortest(sweep.s21[i].real()) << ','
                << shortest(sweep.s21[i].imag()) << '\n';
    }
    else
    {
        out << "frequency_hz,mag_db,phase_deg\n";
        for (std::size_t i = 0; i < sweep.size(); ++i)
            out << shortest(sweep.freqs[i]) << ','
                << shortest(20.0 * std::log10(std::abs(sweep.s21[i]))) << ','
                << shortest(std::arg(sweep.s21[i]) * 180.0 / kPi) << '\n';
    }
    return out.str();
}

std::string format_touchstone(const ComplexSweep &sweep)
{
    std::ostringstream out;
    write_metadata(out, sweep, '!');
    out << "# HZ S RI R 50\n";
    for (std::size_t i = 0; i < sweep.size(); ++i)
    {
        const std::string re = shortest(sweep.s21[i].real());
        const std::string im = shortest(sweep.s21[i].imag());
        out << shortest(sweep.freqs[i]) << " 0 0 " << re << ' ' << im << ' ' << re << ' ' << im
            << " 0 0\n";
    }
    return out.str();
}

void write_sweep(const std::filesystem::path &path, const ComplexSweep &sweep, SweepFormat format)
{
    write_text_file(path, format == SweepFormat::Touchstone ? format_touchstone(sweep)
                                                            : format_csv_sweep(sweep, format));
}

std::string read_text_file(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path &path, std::string_view text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::Io, "cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out)
        throw Error(ErrorKind::Io, "write failed for " + path.string());
}

} // namespace resq::io
