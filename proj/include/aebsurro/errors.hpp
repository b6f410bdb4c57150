#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aebsurro {

// Failure categories. The CLI maps each one onto a process exit code.
enum class ErrorKind {
    rejected_input,        // non-finite or otherwise unusable parameters
    configuration,         // SimConfig / RunConfig invariant violated
    sampling_stalled,      // rejection sampler exceeded its draw cap
    normalization,         // degenerate channel range
    parse,                 // malformed file
    schema,                // well-formed file with wrong shape
    alignment,             // prediction ids do not match the dataset
    validation,            // non-finite values where finite ones are required
    dimension,             // array shapes disagree
    conditioning,          // linear system too ill-conditioned to solve
    rank,                  // underdetermined least-squares system
    pca,                   // degenerate PCA input
    not_fitted,            // model used before fit
    out_of_range,          // hyperparameter outside its admissible range
    missing_prerequisite,  // a pipeline stage's inputs are absent
    io,                    // filesystem failure
    invariant,             // an internal consistency check failed
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::rejected_input: return "rejected_input";
        case ErrorKind::configuration: return "configuration";
        case ErrorKind::sampling_stalled: return "sampling_stalled";
        case ErrorKind::normalization: return "normalization";
        case ErrorKind::parse: return "parse";
        case ErrorKind::schema: return "schema";
        case ErrorKind::alignment: return "alignment";
        case ErrorKind::validation: return "validation";
        case ErrorKind::dimension: return "dimension";
        case ErrorKind::conditioning: return "conditioning";
        case ErrorKind::rank: return "rank";
        case ErrorKind::pca: return "pca";
        case ErrorKind::not_fitted: return "not_fitted";
        case ErrorKind::out_of_range: return "out_of_range";
        case ErrorKind::missing_prerequisite: return "missing_prerequisite";
        case ErrorKind::io: return "io";
        case ErrorKind::invariant: return "invariant";
    }
    return "unknown";
}

// 0 ok, 2 configuration, 3 missing prerequisite, 4 data / alignment / io,
// 5 internal invariant.
constexpr int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::configuration:
        case ErrorKind::out_of_range: return 2;
        case ErrorKind::missing_prerequisite: return 3;
        case ErrorKind::invariant:
        case ErrorKind::not_fitted: return 5;
        default: return 4;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace aebsurro
