#pragma once

#include <stdexcept>
#include <string>

namespace gazefield {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Tensor shapes or extents that do not fit the requested operation.
class ShapeError : public Error {
   public:
    using Error::Error;
};

/// NaN/Inf produced where a finite value is required, or a failed numeric check.
class NumericError : public Error {
   public:
    using Error::Error;
};

/// Invalid or incomplete configuration.
class ConfigError : public Error {
   public:
    using Error::Error;
};

/// Malformed input data: annotation files, images, checkpoints.
class DataError : public Error {
   public:
    using Error::Error;
};

}  // namespace gazefield
