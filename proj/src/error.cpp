#include "idmob/error.hpp"

namespace idmob {

  std::string_view errc_name(Errc code) {
    switch (code) {
      case Errc::UnknownAddress: return "UnknownAddress";
      case Errc::InsufficientFunds: return "InsufficientFunds";
      case Errc::InvalidAmount: return "InvalidAmount";
      case Errc::LevelOutOfRange: return "LevelOutOfRange";
      case Errc::PointOutOfBounds: return "PointOutOfBounds";
      case Errc::MalformedCode: return "MalformedCode";
      case Errc::LevelOrderViolation: return "LevelOrderViolation";
      case Errc::UnsupportedScheme: return "UnsupportedScheme";
      case Errc::AuthenticationFailure: return "AuthenticationFailure";
      case Errc::SeedTooShort: return "SeedTooShort";
      case Errc::MalformedPublicKey: return "MalformedPublicKey";
      case Errc::UnwrapFailure: return "UnwrapFailure";
      case Errc::MalformedKey: return "MalformedKey";
      case Errc::BlobTooLarge: return "BlobTooLarge";
      case Errc::NotFound: return "NotFound";
      case Errc::StorageIo: return "StorageIo";
      case Errc::AlreadyRegistered: return "AlreadyRegistered";
      case Errc::LengthMismatch: return "LengthMismatch";
      case Errc::InvalidSensorType: return "InvalidSensorType";
      case Errc::NotAVendor: return "NotAVendor";
      case Errc::NotACustomer: return "NotACustomer";
      case Errc::UnauthorizedDevice: return "UnauthorizedDevice";
      case Errc::UnsupportedSensorType: return "UnsupportedSensorType";
      case Errc::InvalidGeoCode: return "InvalidGeoCode";
      case Errc::UnknownHandle: return "UnknownHandle";
      case Errc::IndexOutOfRange: return "IndexOutOfRange";
      case Errc::UnknownVendor: return "UnknownVendor";
      case Errc::NoMatchingPurchase: return "NoMatchingPurchase";
      case Errc::AlreadyDelivered: return "AlreadyDelivered";
      case Errc::NoVoteRight: return "NoVoteRight";
      case Errc::UnknownChannel: return "UnknownChannel";
      case Errc::NotAParty: return "NotAParty";
      case Errc::ChannelNotOpen: return "ChannelNotOpen";
      case Errc::ChannelNotClosing: return "ChannelNotClosing";
      case Errc::InsufficientChannelBalance: return "InsufficientChannelBalance";
      case Errc::BadSignature: return "BadSignature";
      case Errc::StaleNonce: return "StaleNonce";
      case Errc::DeadlinePassed: return "DeadlinePassed";
      case Errc::NotNewer: return "NotNewer";
      case Errc::TooEarly: return "TooEarly";
      case Errc::AlreadySettled: return "AlreadySettled";
      case Errc::ParseError: return "ParseError";
      case Errc::ValidationError: return "ValidationError";
      case Errc::RunFinished: return "RunFinished";
    }
    return "Unknown";
  }

  namespace {
    std::string compose(Errc code, const std::string &detail) {
      std::string out{errc_name(code)};
      if (!detail.empty()) {
        out += ": ";
        out += detail;
      }
      return out;
    }
  }  // namespace

  Error::Error(Errc code, const std::string &detail)
      : std::runtime_error(compose(code, detail)), code_(code) {}

}  // namespace idmob
