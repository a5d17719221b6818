#pragma once

#include <stdexcept>
#include <string>

namespace dsc {

/// Raised when a caller violates an operation's preconditions
/// (bad shapes, out-of-range counts, malformed indicators).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class ParseErrorKind { io, bad_magic, truncated, count_mismatch, ragged_row, non_numeric, empty, malformed };

inline const char* to_string(ParseErrorKind k) {
    switch (k) {
        case ParseErrorKind::io: return "io";
        case ParseErrorKind::bad_magic: return "bad_magic";
        case ParseErrorKind::truncated: return "truncated";
        case ParseErrorKind::count_mismatch: return "count_mismatch";
        case ParseErrorKind::ragged_row: return "ragged_row";
        case ParseErrorKind::non_numeric: return "non_numeric";
        case ParseErrorKind::empty: return "empty";
        case ParseErrorKind::malformed: return "malformed";
    }
    return "unknown";
}

class ParseError : public std::runtime_error {
public:
    ParseError(ParseErrorKind kind, const std::string& what, long row = -1)
        : std::runtime_error(what), kind_(kind), row_(row) {}

    ParseErrorKind kind() const noexcept { return kind_; }
    /// Zero-based row for CSV errors, -1 otherwise.
    long row() const noexcept { return row_; }

private:
    ParseErrorKind kind_;
    long row_;
};

/// A training loop produced a non-finite loss.
class TrainingError : public std::runtime_error {
public:
    TrainingError(std::string stage, int epoch, const std::string& what)
        : std::runtime_error(stage + " (epoch " + std::to_string(epoch) + "): " + what),
          stage_(std::move(stage)), epoch_(epoch) {}

    const std::string& stage() const noexcept { return stage_; }
    int epoch() const noexcept { return epoch_; }

private:
    std::string stage_;
    int epoch_;
};

namespace detail {
inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractError(msg);
}
}  // namespace detail

}  // namespace dsc
