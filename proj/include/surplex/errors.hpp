#pragma once

#include <stdexcept>
#include <string>

namespace surplex {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (CLI flags, config files, option structs).
struct ConfigError : Error {
  using Error::Error;
};

// Filesystem and parse failures for corpora, snapshots, reports.
struct IoError : Error {
  using Error::Error;
};

// Remote inference backend failures (network, HTTP status, malformed reply,
// or an operation the remote protocol cannot express).
struct TransportError : Error {
  using Error::Error;
};

}  // namespace surplex
