#pragma once

#include <stdexcept>
#include <string>

namespace tabdpd {

/// Base class for all errors raised by the library. Execution never throws;
/// these cover malformed input (tables, forms, manifests, annotations).
class Error : public std::runtime_error {
public:
   using std::runtime_error::runtime_error;
};

class TableError : public Error {
public:
   using Error::Error;
};

class ParseError : public Error {
public:
   ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}

   std::size_t position() const noexcept { return position_; }

private:
   std::size_t position_;
};

class ConfigError : public Error {
public:
   using Error::Error;
};

/// Unreadable or unwritable files.
class IoError : public Error {
public:
   using Error::Error;
};

} // namespace tabdpd
