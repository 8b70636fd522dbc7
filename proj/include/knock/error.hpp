#pragma once

#include <stdexcept>
#include <string>

namespace knock {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid argument (out-of-range parameter, mismatched sample rates, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents (bad WAV header, truncated chunk, bad manifest row).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Structurally valid file using an encoding we do not handle.
class CodecError : public FormatError {
public:
    using FormatError::FormatError;
};

/// A decoded signal carries zero samples.
class EmptySignalError : public FormatError {
public:
    using FormatError::FormatError;
};

/// Filesystem failure (missing file, unwritable path).
class IoError : public Error {
public:
    using Error::Error;
};

/// Tensor shape mismatch in the neural stack.
class ShapeError : public Error {
public:
    using Error::Error;
};

} // namespace knock
