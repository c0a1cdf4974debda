#include "cnn/error.hpp"

namespace cnn {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Index: return "index";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::StrideFit: return "stride-fit";
    case ErrorKind::Geometry: return "geometry";
    case ErrorKind::Label: return "label";
    case ErrorKind::Format: return "format";
    case ErrorKind::Length: return "length";
    case ErrorKind::Range: return "range";
    case ErrorKind::Pairing: return "pairing";
    case ErrorKind::State: return "state";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::BadMagic: return "bad-magic";
    case ErrorKind::UnknownVersion: return "unknown-version";
    case ErrorKind::ArchParse: return "arch-parse";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace cnn
