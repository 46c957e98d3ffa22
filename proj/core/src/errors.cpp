#include "metaadapt/errors.hpp"

namespace metaadapt {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::BadParams: return "BadParams";
    case ErrorKind::CovarianceDivergence: return "CovarianceDivergence";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace metaadapt
