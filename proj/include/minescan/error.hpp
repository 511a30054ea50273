#ifndef MINESCAN_ERROR_HPP
#define MINESCAN_ERROR_HPP

#include <stdexcept>
#include <string>

namespace minescan {

// Root of every error the library throws. Callers that only need a message
// catch this; tests and the CLI catch the specific kinds below.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IoError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct MaxvalError : Error { using Error::Error; };
struct TruncatedError : Error { using Error::Error; };
struct DimensionError : Error { using Error::Error; };
struct NoContentError : Error { using Error::Error; };
struct BoundsError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct ModelFormatError : Error { using Error::Error; };
struct ModelVersionError : Error { using Error::Error; };
struct SpecError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct PipelineError : Error { using Error::Error; };

} // namespace minescan

#endif
