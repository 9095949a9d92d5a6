#pragma once

#include <gmpxx.h>

#include <stdexcept>
#include <string>
#include <string_view>

namespace teamsem {

/// Exact rational. mpq_class keeps values canonical after every operation.
using Rational = mpq_class;

/// Thrown when an operation receives data outside its domain (unknown
/// variable, mismatched team domains, malformed distribution, ...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when an input exceeds a configured search cap.
class RefusedInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses "p/q" or "p". Rejects decimals.
Rational parse_rational(std::string_view text);

/// Canonical "p/q" (or "p" when q == 1).
std::string to_string(const Rational& r);

}  // namespace teamsem
