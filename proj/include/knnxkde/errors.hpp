#pragma once

#include <stdexcept>
#include <string>

namespace knnxkde {

/// Malformed input file (CSV cell, JSON config).
class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Shape violations: too few columns, mismatched lengths, column-count
/// mismatch between a matrix and its normalization parameters.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A missing pattern has no row observed on all of its columns.
class EmptyDonors : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Method identifiers that are recognised but deliberately not built.
class NotImplemented : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace knnxkde
