#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace idmob {

  enum class Errc {
    // ledger
    UnknownAddress,
    InsufficientFunds,
    InvalidAmount,
    // geohex
    LevelOutOfRange,
    PointOutOfBounds,
    MalformedCode,
    LevelOrderViolation,
    // crypto
    UnsupportedScheme,
    AuthenticationFailure,
    SeedTooShort,
    MalformedPublicKey,
    UnwrapFailure,
    MalformedKey,
    // blobstore
    BlobTooLarge,
    NotFound,
    StorageIo,
    // marketplace
    AlreadyRegistered,
    LengthMismatch,
    InvalidSensorType,
    NotAVendor,
    NotACustomer,
    UnauthorizedDevice,
    UnsupportedSensorType,
    InvalidGeoCode,
    UnknownHandle,
    IndexOutOfRange,
    UnknownVendor,
    NoMatchingPurchase,
    AlreadyDelivered,
    NoVoteRight,
    // channels
    UnknownChannel,
    NotAParty,
    ChannelNotOpen,
    ChannelNotClosing,
    InsufficientChannelBalance,
    BadSignature,
    StaleNonce,
    DeadlinePassed,
    NotNewer,
    TooEarly,
    AlreadySettled,
    // sim
    ParseError,
    ValidationError,
    RunFinished,
  };

  std::string_view errc_name(Errc code);

  /// Every recoverable failure in the library is reported as an Error carrying
  /// one of the named codes above. The message adds context for humans only;
  /// callers dispatch on code().
  class Error : public std::runtime_error {
   public:
    Error(Errc code, const std::string &detail = {});

    Errc code() const noexcept {
      return code_;
    }

   private:
    Errc code_;
  };

}  // namespace idmob
