#pragma once

#include <stdexcept>
#include <string>

namespace trilstm {

// Error taxonomy shared by every module. CLI maps ConfigError/ParseError/
// ValidationError/BoundsError to exit code 1, the rest to exit code 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct BoundsError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct ProtocolError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

struct TrainingError : Error {
    using Error::Error;
};

} // namespace trilstm
