#include "privprof/error.hpp"

namespace privprof {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kPartyMismatch: return "PartyMismatch";
    case Errc::kOutOfRange: return "OutOfRange";
    case Errc::kUnsupportedRing: return "UnsupportedRing";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kTripleExhausted: return "TripleExhausted";
    case Errc::kChannelClosed: return "ChannelClosed";
    case Errc::kRoundDesync: return "RoundDesync";
    case Errc::kOversize: return "Oversize";
    case Errc::kTruncated: return "Truncated";
    case Errc::kUnknownType: return "UnknownType";
    case Errc::kParseError: return "ParseError";
    case Errc::kValidationError: return "ValidationError";
    case Errc::kIoFailure: return "IoFailure";
    case Errc::kHandshakeMismatch: return "HandshakeMismatch";
    case Errc::kOverflow: return "Overflow";
    case Errc::kLexiconMissing: return "LexiconMissing";
    case Errc::kBadDimension: return "BadDimension";
    case Errc::kEmptyText: return "EmptyText";
    case Errc::kConfig: return "ConfigError";
    case Errc::kPeerError: return "PeerError";
    case Errc::kProtocol: return "ProtocolError";
  }
  return "Unknown";
}

void fail(Errc code, const std::string& what) {
  throw Error(code, std::string(errc_name(code)) + ": " + what);
}

}  // namespace privprof
