#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace floorid {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data or configuration.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A specific line of a scan file failed to parse or validate.
class DatasetError : public ValidationError {
public:
    DatasetError(std::size_t line, const std::string& what)
        : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// The cluster ordering cannot be oriented from the anchor.
class IndexingError : public Error {
public:
    using Error::Error;
};

// Anchor sits on the middle floor of an odd-height building; both orientations fit.
class MiddleFloorAnchorError : public IndexingError {
public:
    using IndexingError::IndexingError;
};

// Both candidate end clusters are equally close to the anchor embedding.
class AmbiguousOrientationError : public IndexingError {
public:
    using IndexingError::IndexingError;
};

// Two predicted clusters share the same majority ground-truth floor.
class DegenerateMappingError : public Error {
public:
    using Error::Error;
};

// Training diverged (non-finite loss or parameters).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace floorid
