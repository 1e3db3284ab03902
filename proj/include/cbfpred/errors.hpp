#pragma once

#include <stdexcept>
#include <string>

namespace cbfpred {

/// Bad user-supplied configuration (scenario files, flags, parameter ranges).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

/// Unreadable or structurally corrupt data file.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& m) : std::runtime_error(m) {}
};

/// Recognized file with an unsupported magic/version.
struct VersionError : std::runtime_error {
    explicit VersionError(const std::string& m) : std::runtime_error(m) {}
};

/// Field/scenario pairing mismatch (hash check failed or sidecar missing).
struct ProvenanceError : std::runtime_error {
    explicit ProvenanceError(const std::string& m) : std::runtime_error(m) {}
};

/// Query outside the region where an answer is defined.
struct OutOfDomainError : std::runtime_error {
    explicit OutOfDomainError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace cbfpred
