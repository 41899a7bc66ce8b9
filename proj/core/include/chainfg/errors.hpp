#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chainfg {

/// Singular or under-constrained linear system. `index` is 1-based: the
/// offending diagonal entry for back substitution, the keyframe id for
/// elimination-level failures.
class SingularSystemError : public std::runtime_error {
public:
    SingularSystemError(const std::string& what, int index)
        : std::runtime_error(what), index_(index) {}
    int index() const { return index_; }

private:
    int index_;
};

class CovarianceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LayoutError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ChainViolationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed binary stream; `offset` is the byte position where decoding failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Text-input parse failure; `line` is 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

}  // namespace chainfg
