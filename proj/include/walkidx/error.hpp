#pragma once

#include <stdexcept>
#include <string>

namespace walkidx {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorClass {
  config,      // bad configuration or validation failure
  data,        // malformed or inconsistent input data, I/O failure
  degenerate,  // statistics undefined for the given data
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorClass::config, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t location, const std::string& what)
      : Error(ErrorClass::data, source + ":" + std::to_string(location) + ": " + what),
        location_(location) {}
  /// 1-based line, row or feature number, depending on the format.
  std::size_t location() const noexcept { return location_; }

 private:
  std::size_t location_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorClass::data, what) {}
};

class InvalidGeometry : public Error {
 public:
  explicit InvalidGeometry(const std::string& what) : Error(ErrorClass::data, what) {}
};

class AlignmentError : public Error {
 public:
  explicit AlignmentError(const std::string& what) : Error(ErrorClass::data, what) {}
};

class GraphError : public Error {
 public:
  explicit GraphError(const std::string& what) : Error(ErrorClass::data, what) {}
};

class UnsupportedKind : public Error {
 public:
  explicit UnsupportedKind(const std::string& what) : Error(ErrorClass::config, what) {}
};

class InsufficientData : public Error {
 public:
  explicit InsufficientData(const std::string& what) : Error(ErrorClass::degenerate, what) {}
};

class DegenerateField : public Error {
 public:
  explicit DegenerateField(const std::string& what) : Error(ErrorClass::degenerate, what) {}
};

class DegenerateWeights : public Error {
 public:
  explicit DegenerateWeights(const std::string& what) : Error(ErrorClass::degenerate, what) {}
};

}  // namespace walkidx
