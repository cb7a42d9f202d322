#pragma once

#include <stdexcept>
#include <string>

namespace cfx {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Backend transport.
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what, bool retryable = true)
      : Error(what), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

class AuthError : public Error {
 public:
  using Error::Error;
};

class EmptyReply : public Error {
 public:
  using Error::Error;
};

class ParseExhausted : public Error {
 public:
  using Error::Error;
};

class UnsupportedCall : public Error {
 public:
  using Error::Error;
};

// Reply parsing.
enum class ParseErrorKind { NoTagFound, UnbalancedTags, BadFormat, BadLabel };

class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  ParseErrorKind kind() const { return kind_; }

 private:
  ParseErrorKind kind_;
};

class MissingBinding : public Error {
 public:
  explicit MissingBinding(std::string name)
      : Error("missing binding for placeholder {" + name + "}"), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

// A pipeline could not finish a document; the caller records it as failed.
class DocumentFailed : public Error {
 public:
  using Error::Error;
};

class AllRunsFailed : public Error {
 public:
  using Error::Error;
};

class LexiconError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

class SampleError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfx
