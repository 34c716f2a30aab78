#ifndef RESQ_ERRORS_HPP
#define RESQ_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace resq
{

enum class ErrorKind
{
    InvalidInput,
    NonPhysicalFit,
    ConvergenceFailure,
    DegenerateGeometry,
    InsufficientWings,
    WindowMismatch,
    InsufficientSeries,
    InsufficientDynamicRange,
    MetadataMissing,
    MalformedSweep,
    UnsupportedFormat,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every library failure is reported through this type. `stage` names the
// pipeline step that raised it (e.g. "fit_circle"), empty for leaf helpers.
class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string &message, std::string stage = {});

    ErrorKind kind() const noexcept { return kind_; }
    const std::string &stage() const noexcept { return stage_; }
    const std::string &detail() const noexcept { return detail_; }

    // Re-raise with a stage tag, keeping kind and detail.
    [[nodiscard]] Error with_stage(std::string stage) const;

private:
    ErrorKind kind_;
    std::string stage_;
    std::string detail_;
};

} // namespace resq

#endif
