#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace xarb {

/// Exact fixed-point decimal for token amounts.
///
/// Values are stored as a signed 256-bit integer count of 10^-18 units, which
/// covers every ERC-20 precision in use. Overflow throws instead of wrapping.
/// Arithmetic on amounts never touches floating point; `to_double` exists only
/// for USD valuation.
class Decimal {
 public:
  using Rep = boost::multiprecision::checked_int256_t;
  static constexpr int kScale = 18;

  Decimal() = default;

  /// Parses "[-]digits[.digits]". Throws std::invalid_argument on malformed
  /// text or more than 18 fractional digits.
  static Decimal parse(std::string_view text);
  static std::optional<Decimal> try_parse(std::string_view text);

  static Decimal from_units(Rep units);
  static Decimal from_int(std::int64_t whole);
  /// Truncates toward zero after `decimals` fractional digits (0..18).
  static Decimal from_double(double value, int decimals);

  /// Canonical form: no exponent, no trailing fractional zeros, "0" for zero.
  std::string to_string() const;
  double to_double() const;

  const Rep& units() const { return units_; }
  bool is_zero() const { return units_ == 0; }
  bool is_negative() const { return units_ < 0; }
  Decimal abs() const;

  /// Multiplies by num/den and truncates toward zero at 10^-decimals.
  Decimal scaled(std::int64_t num, std::int64_t den, int decimals = kScale) const;

  Decimal& operator+=(const Decimal& o) {
    units_ += o.units_;
    return *this;
  }
  Decimal& operator-=(const Decimal& o) {
    units_ -= o.units_;
    return *this;
  }
  friend Decimal operator+(Decimal a, const Decimal& b) { return a += b; }
  friend Decimal operator-(Decimal a, const Decimal& b) { return a -= b; }
  friend Decimal operator-(const Decimal& a) { return from_units(-a.units_); }
  friend bool operator==(const Decimal& a, const Decimal& b) { return a.units_ == b.units_; }
  friend bool operator!=(const Decimal& a, const Decimal& b) { return a.units_ != b.units_; }
  friend bool operator<(const Decimal& a, const Decimal& b) { return a.units_ < b.units_; }
  friend bool operator>(const Decimal& a, const Decimal& b) { return a.units_ > b.units_; }
  friend bool operator<=(const Decimal& a, const Decimal& b) { return a.units_ <= b.units_; }
  friend bool operator>=(const Decimal& a, const Decimal& b) { return a.units_ >= b.units_; }

 private:
  Rep units_{0};
};

/// Exact comparison of num_a/den_a against num_b/den_b; dens must be > 0.
/// Returns -1, 0 or 1.
int compare_ratios(const Decimal& num_a, const Decimal& den_a, const Decimal& num_b,
                   const Decimal& den_b);

/// Exact test of num/den <= threshold; den must be > 0.
bool ratio_at_most(const Decimal& num, const Decimal& den, const Decimal& threshold);

/// Exact test of num/den < threshold; den must be > 0.
bool ratio_below(const Decimal& num, const Decimal& den, const Decimal& threshold);

/// num/den rounded to double; den must be > 0.
double ratio_to_double(const Decimal& num, const Decimal& den);

}  // namespace xarb
