#include "resq/errors.hpp"

namespace resq
{

std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind)
    {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::NonPhysicalFit: return "NonPhysicalFit";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorKind::InsufficientWings: return "InsufficientWings";
    case ErrorKind::WindowMismatch: return "WindowMismatch";
    case ErrorKind::InsufficientSeries: return "InsufficientSeries";
    case ErrorKind::InsufficientDynamicRange: return "InsufficientDynamicRange";
    case ErrorKind::MetadataMissing: return "MetadataMissing";
    case ErrorKind::MalformedSweep: return "MalformedSweep";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

namespace
{
std::string compose(ErrorKind kind, const std::string &stage, const std::string &message)
{
    std::string out(to_string(kind));
    if (!stage.empty())
        out += " [" + stage + "]";
    out += ": " + message;
    return out;
}
} // namespace

Error::Error(ErrorKind kind, const std::string &message, std::string stage)
    : std::runtime_error(compose(kind, stage, message)), kind_(kind), stage_(std::move(stage)),
      detail_(message)
{
}

Error Error::with_stage(std::string stage) const
{
    if (!stage_.empty())
        return *this;
    return Error(kind_, detail_, std::move(stage));
}

} // namespace resq
