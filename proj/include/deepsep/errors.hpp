#pragma once

#include <stdexcept>
#include <string>

namespace deepsep {

enum class FormatErrorKind {
    Io,             // file could not be opened or written
    BadMagic,       // header does not identify the expected format
    Truncated,      // file ends before the declared payload
    MissingRecord,  // a required named record is absent
    ShapeMismatch,  // record shape disagrees with the declared architecture
    Invalid,        // structurally malformed content
};

const char* format_error_kind_name(FormatErrorKind kind);

/// Errors reading or writing the binary segment and weight files.
class FormatError : public std::runtime_error {
public:
    FormatError(FormatErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    FormatErrorKind kind() const { return kind_; }

private:
    FormatErrorKind kind_;
};

/// Non-finite values or divergence during a numerical procedure.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace deepsep
