#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mlc {

/// Base class for every domain error raised by the library. `name()` is the
/// stable identifier printed by the command-line tool on failure.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(what), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

#define MLC_DEFINE_ERROR(Type)                                              \
    class Type : public Error {                                             \
    public:                                                                 \
        explicit Type(const std::string& what) : Error(#Type, what) {}      \
    }

MLC_DEFINE_ERROR(InvalidSpec);
MLC_DEFINE_ERROR(NoConvergence);
MLC_DEFINE_ERROR(GeometryInfeasible);
MLC_DEFINE_ERROR(PortMismatch);
MLC_DEFINE_ERROR(UnknownPort);
MLC_DEFINE_ERROR(DoubleWire);
MLC_DEFINE_ERROR(NumericalBlowup);
MLC_DEFINE_ERROR(DuplicateId);
MLC_DEFINE_ERROR(UnboundChannel);
MLC_DEFINE_ERROR(Unsettled);
MLC_DEFINE_ERROR(NoCycles);

#undef MLC_DEFINE_ERROR

/// Errors carrying a source position (1-based line and column).
class PositionedError : public Error {
public:
    PositionedError(std::string name, std::size_t line, std::size_t column, const std::string& msg)
        : Error(std::move(name), std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class SyntaxError : public PositionedError {
public:
    SyntaxError(std::size_t line, std::size_t column, std::string expected)
        : PositionedError("SyntaxError", line, column, "expected " + expected),
          expected_(std::move(expected)) {}

    const std::string& expected() const noexcept { return expected_; }

private:
    std::string expected_;
};

class UnknownReference : public PositionedError {
public:
    UnknownReference(std::size_t line, std::size_t column, const std::string& what)
        : PositionedError("UnknownReference", line, column, what) {}
};

class DuplicateIdAt : public PositionedError {
public:
    DuplicateIdAt(std::size_t line, std::size_t column, const std::string& what)
        : PositionedError("DuplicateId", line, column, what) {}
};

}  // namespace mlc
