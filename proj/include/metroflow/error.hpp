#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace metroflow {

/// Base of every pipeline error. `what()` reads "module.operation: message".
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string operation, const std::string& message)
        : std::runtime_error(module + "." + operation + ": " + message),
          module_(std::move(module)),
          operation_(std::move(operation)) {}

    const std::string& module() const noexcept { return module_; }
    const std::string& operation() const noexcept { return operation_; }

private:
    std::string module_;
    std::string operation_;
};

#define METROFLOW_DEFINE_ERROR(Name)                                                    \
    class Name : public Error {                                                         \
    public:                                                                             \
        Name(std::string module, std::string operation, const std::string& message)     \
            : Error(std::move(module), std::move(operation), message) {}                \
    };

METROFLOW_DEFINE_ERROR(InvalidArgument)
METROFLOW_DEFINE_ERROR(OutOfServiceWindow)
METROFLOW_DEFINE_ERROR(CoverageGap)
METROFLOW_DEFINE_ERROR(EmptySelection)
METROFLOW_DEFINE_ERROR(DegenerateStats)
METROFLOW_DEFINE_ERROR(MissingKey)
METROFLOW_DEFINE_ERROR(InsufficientHistory)
METROFLOW_DEFINE_ERROR(DegenerateSplit)
METROFLOW_DEFINE_ERROR(EmptyInput)
METROFLOW_DEFINE_ERROR(WidthMismatch)
METROFLOW_DEFINE_ERROR(NonFiniteLoss)
METROFLOW_DEFINE_ERROR(LengthMismatch)
METROFLOW_DEFINE_ERROR(ConstantInput)
METROFLOW_DEFINE_ERROR(RankDeficient)
METROFLOW_DEFINE_ERROR(TooFewObservations)
METROFLOW_DEFINE_ERROR(AllZeroResiduals)
METROFLOW_DEFINE_ERROR(InvalidConfig)

#undef METROFLOW_DEFINE_ERROR

/// Malformed CSV row. `line` is 1-based and counts the header; `column` is 1-based,
/// 0 when the whole row is at fault.
class ParseError : public Error {
public:
    ParseError(std::string operation, std::size_t line, std::size_t column, const std::string& reason)
        : Error("ingest", std::move(operation),
                "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + reason),
          line_(line),
          column_(column),
          reason_(reason) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string reason_;
};

class HumidityOutOfRange : public ParseError {
public:
    using ParseError::ParseError;
};

}  // namespace metroflow
