#pragma once

#include <stdexcept>
#include <string>

namespace medrec {

// Error taxonomy maps one-to-one onto CLI exit codes: ConfigError -> 2,
// MissingArtifactError -> 3, NumericError -> 4. DataError covers malformed
// input files and is reported as a config/input problem (exit 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct MissingArtifactError : std::runtime_error {
    explicit MissingArtifactError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace medrec
