#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace patchlr {

/// Malformed or unsupported image/mask file. `offset` is the byte position
/// at which parsing stopped.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// A pixel that no patch of any group reads.
class CoverageError : public std::runtime_error {
public:
    CoverageError(int row, int col)
        : std::runtime_error("pixel (" + std::to_string(row) + "," + std::to_string(col) +
                             ") is not covered by any group"),
          row_(row), col_(col) {}

    int row() const noexcept { return row_; }
    int col() const noexcept { return col_; }

private:
    int row_;
    int col_;
};

/// Explicit operator assembly refused because the tangent space is too large.
class InstanceTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incoherence of an empty tangent space (rank zero).
class UndefinedIncoherence : public std::domain_error {
public:
    UndefinedIncoherence() : std::domain_error("incoherence undefined for rank 0") {}
};

/// Invalid configuration. Carries every problem found, not just the first.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : std::invalid_argument(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p) {
        std::string out = "invalid configuration:";
        for (const auto& s : p)
            out += "\n  " + s;
        return out;
    }

    std::vector<std::string> problems_;
};

} // namespace patchlr
