#pragma once

#include <stdexcept>
#include <string>

namespace mggp {

/// Problems with input data: missing files, malformed CSV cells, variable
/// mismatches between a model and a dataset.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Parse failures in expression text or model files. A kind of data error so
/// callers that only distinguish the coarse categories can catch DataError.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t position)
      : DataError(what), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Invalid configuration: bad key, bad value, inconsistent rates.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem failures while writing outputs.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mggp
