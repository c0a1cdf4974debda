#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cnn {

enum class ErrorKind {
  Dimension,
  Index,
  Numeric,
  Shape,
  StrideFit,
  Geometry,
  Label,
  Format,
  Length,
  Range,
  Pairing,
  State,
  Precondition,
  BadMagic,
  UnknownVersion,
  ArchParse,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Every failure raised by the library. The kind is stable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cnn
