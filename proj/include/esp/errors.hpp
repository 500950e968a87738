#pragma once

#include <stdexcept>
#include <string>

namespace esp {

// Base for every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ConstructionError : public Error {
public:
    using Error::Error;
};

class CellError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class SingularityError : public Error {
public:
    SingularityError(const std::string& what, std::size_t i, std::size_t j)
        : Error(what), i_(i), j_(j) {}
    std::size_t first() const { return i_; }
    std::size_t second() const { return j_; }

private:
    std::size_t i_, j_;
};

class ZeroModeError : public Error {
public:
    using Error::Error;
};

class PlanningError : public Error {
public:
    using Error::Error;
};

class OracleError : public Error {
public:
    using Error::Error;
};

class SimulationError : public Error {
public:
    SimulationError(const std::string& what, long step = -1) : Error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

class TuningError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    InputError(const std::string& what, int line = 0, int column = 0)
        : Error(what), line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_, column_;
};

} // namespace esp
