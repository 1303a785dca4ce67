#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lapnet {

/// Dense row-major matrix of doubles. Used for feature matrices and as the
/// storage type of every network tensor.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument or shape passed to a library function.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Malformed input file. `line()` is 1-based, or 0 when the error is not
/// tied to a particular line. The message reads "source: line N: detail".
class ParseError : public Error {
public:
    ParseError(const std::string& detail, std::size_t line, const std::string& source = {});
    std::size_t line() const { return line_; }
    const std::string& detail() const { return detail_; }

private:
    std::size_t line_;
    std::string detail_;
};

class MeshError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual);
    double residual() const { return residual_; }

private:
    double residual_;
};

/// 64-bit FNV-1a, incremental.
class Fnv1a {
public:
    void update(const void* data, std::size_t size);
    void update(std::string_view text) { update(text.data(), text.size()); }
    template <typename T>
    void update_value(const T& value)
    {
        update(&value, sizeof(T));
    }
    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes);

} // namespace lapnet
