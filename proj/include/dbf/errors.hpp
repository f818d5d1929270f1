#pragma once

#include <stdexcept>
#include <string>

namespace dbf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scenario document does not match the schema; message names the field path.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A domain invariant was violated (duplicate ids, empty receiver list, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

class SynthesisError : public Error {
public:
    using Error::Error;
};

/// No correlation peak above the detection threshold.
class DetectionError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

/// Singular or ill-conditioned constraint Gram matrix.
class DegeneracyError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

class ResourceError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace dbf
