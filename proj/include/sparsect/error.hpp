#pragma once

#include <stdexcept>
#include <string>

namespace sparsect {

/// Error categories. The numeric value doubles as the CLI exit code.
enum class ErrorKind : int {
    Parameter = 2,
    Format = 3,
    Integrity = 4,
    Lookup = 5,
    Spec = 6,
    Pipeline = 7,
    Evaluation = 8,
    Io = 9,
    UndefinedCorrelation = 10,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

#define SPARSECT_DEFINE_ERROR(Name, Kind)                                       \
    class Name : public Error {                                                 \
    public:                                                                     \
        explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
    };

SPARSECT_DEFINE_ERROR(ParameterError, Parameter)
SPARSECT_DEFINE_ERROR(FormatError, Format)
SPARSECT_DEFINE_ERROR(IntegrityError, Integrity)
SPARSECT_DEFINE_ERROR(LookupError, Lookup)
SPARSECT_DEFINE_ERROR(SpecError, Spec)
SPARSECT_DEFINE_ERROR(PipelineError, Pipeline)
SPARSECT_DEFINE_ERROR(EvaluationError, Evaluation)
SPARSECT_DEFINE_ERROR(IoError, Io)
SPARSECT_DEFINE_ERROR(UndefinedCorrelationError, UndefinedCorrelation)

#undef SPARSECT_DEFINE_ERROR

}  // namespace sparsect
