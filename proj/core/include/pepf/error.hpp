#pragma once

#include <stdexcept>
#include <string>

namespace pepf {

/// Base of every error raised by the library. `category()` drives the CLI
/// exit code (config → 2, data → 3, invariant → 4).
class Error : public std::runtime_error {
public:
    enum class Category { config, data, invariant };

    Error(Category category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    Category category() const noexcept { return category_; }

private:
    Category category_;
};

/// Invalid parameters or inconsistent run configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(Category::config, what) {}
};

/// Malformed or unusable input data.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(Category::data, what) {}
};

/// Missing column or wrong column roles in an input file.
class SchemaError : public DataError {
public:
    explicit SchemaError(const std::string& what) : DataError("schema error: " + what) {}
};

/// Duplicate timestamps or non-uniform spacing.
class GridError : public DataError {
public:
    explicit GridError(const std::string& what) : DataError("grid error: " + what) {}
};

/// A row that cannot be parsed; `line()` is 1-based and counts the header.
class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class InsufficientHistoryError : public DataError {
public:
    explicit InsufficientHistoryError(const std::string& what)
        : DataError("insufficient history: " + what) {}
};

/// Mismatched widths, lengths or grids between arguments.
class ShapeError : public DataError {
public:
    explicit ShapeError(const std::string& what) : DataError("shape error: " + what) {}
};

/// An internal invariant was violated; signals a logic bug rather than bad input.
class InvariantError : public Error {
public:
    explicit InvariantError(const std::string& what) : Error(Category::invariant, what) {}
};

class FeasibilityError : public InvariantError {
public:
    explicit FeasibilityError(const std::string& what)
        : InvariantError("feasibility error: " + what) {}
};

} // namespace pepf
