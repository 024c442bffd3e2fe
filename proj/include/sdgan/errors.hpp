#pragma once

#include <stdexcept>
#include <string>

namespace sdgan {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BadShape : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct MissingFile : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct UnknownLabel : Error { using Error::Error; };
struct IdMismatch : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct BadEpoch : Error { using Error::Error; };
struct VersionMismatch : Error { using Error::Error; };
struct CorruptFile : Error { using Error::Error; };
struct InterruptedResume : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace sdgan
