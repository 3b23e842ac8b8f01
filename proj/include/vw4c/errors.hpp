#pragma once

#include <stdexcept>
#include <string>

namespace vw4c {

// Bad shapes, incompatible configuration, malformed arguments. CLI exit 2.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Missing files, checksum mismatches, version skew. CLI exit 3.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values, domain violations during computation. CLI exit 4.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vw4c
