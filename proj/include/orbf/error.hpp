#pragma once

#include <stdexcept>
#include <string>

namespace orbf {

/// Coarse classification used by the CLI to pick an exit code.
enum class ErrorCategory { Config, Data, Runtime };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

#define ORBF_DEFINE_ERROR(Name, Category)                                     \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what)                                \
            : Error(ErrorCategory::Category, what) {}                         \
    }

// Configuration and hyperparameter problems.
ORBF_DEFINE_ERROR(ConfigError, Config);
// Malformed input files (bad dates, bad numbers, bad headers).
ORBF_DEFINE_ERROR(InputFormatError, Data);
// Input that parses but violates a data invariant.
ORBF_DEFINE_ERROR(ValidationError, Data);
// Mathematically invalid input, e.g. log of a non-positive price.
ORBF_DEFINE_ERROR(DomainError, Data);
// Non-finite observations fed to an online learner.
ORBF_DEFINE_ERROR(DataError, Data);
ORBF_DEFINE_ERROR(ShapeError, Runtime);
ORBF_DEFINE_ERROR(SizingError, Runtime);
ORBF_DEFINE_ERROR(SelectionError, Runtime);
ORBF_DEFINE_ERROR(SolverError, Runtime);
ORBF_DEFINE_ERROR(ProtocolError, Runtime);
ORBF_DEFINE_ERROR(IoError, Runtime);

#undef ORBF_DEFINE_ERROR

} // namespace orbf
