#pragma once

#include <stdexcept>
#include <string>

namespace twinsig {

/// Bad argument or precondition violation supplied by the caller.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Lookup of an id that does not exist in the network.
class UnknownId : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Destination cannot be reached from the origin.
class NoPath : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A phase request arrived while the controller was mid-transition.
class RejectedRequest : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A delay ledger invariant was broken (entry snapshot above the running total).
class LedgerCorruption : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed configuration, scenario, or network file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace twinsig
