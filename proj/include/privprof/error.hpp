#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace privprof {

enum class Errc {
  kPartyMismatch,
  kOutOfRange,
  kUnsupportedRing,
  kDimensionMismatch,
  kTripleExhausted,
  kChannelClosed,
  kRoundDesync,
  kOversize,
  kTruncated,
  kUnknownType,
  kParseError,
  kValidationError,
  kIoFailure,
  kHandshakeMismatch,
  kOverflow,
  kLexiconMissing,
  kBadDimension,
  kEmptyText,
  kConfig,
  kPeerError,
  kProtocol,
};

std::string_view errc_name(Errc code);

// All library failures are reported through this exception type; the code
// carries the contract-level error kind.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

}  // namespace privprof
