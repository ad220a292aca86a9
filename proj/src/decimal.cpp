#include "xarb/decimal.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace xarb {
namespace {

using Rep = Decimal::Rep;

const Rep& pow10(int n) {
  static const std::array<Rep, 2 * Decimal::kScale + 1> table = [] {
    std::array<Rep, 2 * Decimal::kScale + 1> t{};
    t[0] = 1;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * 10;
    return t;
  }();
  return table.at(static_cast<std::size_t>(n));
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::optional<Decimal> Decimal::try_parse(std::string_view text) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  std::size_t i = 0;
  if (text[0] == '-') {
    negative = true;
    i = 1;
  }
  Rep whole = 0;
  std::size_t int_digits = 0;
  for (; i < text.size() && is_digit(text[i]); ++i, ++int_digits) {
    whole = whole * 10 + (text[i] - '0');
  }
  Rep frac = 0;
  int frac_digits = 0;
  if (i < text.size() && text[i] == '.') {
    ++i;
    for (; i < text.size() && is_digit(text[i]); ++i) {
      if (++frac_digits > kScale) return std::nullopt;
      frac = frac * 10 + (text[i] - '0');
    }
    if (frac_digits == 0) return std::nullopt;
  }
  if (i != text.size() || int_digits == 0) return std::nullopt;
  Rep units = whole * pow10(kScale) + frac * pow10(kScale - frac_digits);
  return from_units(negative ? Rep(-units) : units);
}

Decimal Decimal::parse(std::string_view text) {
  try {
    if (auto d = try_parse(text)) return *d;
  } catch (const std::overflow_error&) {
  }
  throw std::invalid_argument("malformed decimal '" + std::string(text) + "'");
}

Decimal Decimal::from_units(Rep units) {
  Decimal d;
  d.units_ = std::move(units);
  return d;
}

Decimal Decimal::from_int(std::int64_t whole) { return from_units(Rep(whole) * pow10(kScale)); }

Decimal Decimal::from_double(double value, int decimals) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite amount");
  if (decimals < 0 || decimals > kScale) throw std::invalid_argument("decimals out of range");
  std::array<char, 512> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed,
                           kScale);
  if (res.ec != std::errc{}) throw std::invalid_argument("amount too large");
  Decimal d = parse(std::string_view(buf.data(), static_cast<std::size_t>(res.ptr - buf.data())));
  const Rep& step = pow10(kScale - decimals);
  d.units_ -= d.units_ % step;  // toward zero
  return d;
}

std::string Decimal::to_string() const {
  const bool negative = units_ < 0;
  Rep mag = negative ? Rep(-units_) : units_;
  Rep whole = mag / pow10(kScale);
  Rep frac = mag % pow10(kScale);
  std::string out = negative ? "-" : "";
  out += whole.str();
  if (frac != 0) {
    std::string digits = frac.str();
    digits.insert(0, static_cast<std::size_t>(kScale) - digits.size(), '0');
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    out += '.';
    out += digits;
  }
  return out;
}

double Decimal::to_double() const {
  Rep whole = units_ / pow10(kScale);
  Rep frac = units_ % pow10(kScale);
  return whole.convert_to<double>() + frac.convert_to<double>() / 1e18;
}

Decimal Decimal::abs() const { return from_units(units_ < 0 ? Rep(-units_) : units_); }

Decimal Decimal::scaled(std::int64_t num, std::int64_t den, int decimals) const {
  if (den == 0) throw std::invalid_argument("zero denominator");
  if (decimals < 0 || decimals > kScale) throw std::invalid_argument("decimals out of range");
  Rep v = units_ * num / den;
  v -= v % pow10(kScale - decimals);
  return from_units(v);
}

int compare_ratios(const Decimal& num_a, const Decimal& den_a, const Decimal& num_b,
                   const Decimal& den_b) {
  const Rep lhs = num_a.units() * den_b.units();
  const Rep rhs = num_b.units() * den_a.units();
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

bool ratio_at_most(const Decimal& num, const Decimal& den, const Decimal& threshold) {
  return num.units() * pow10(Decimal::kScale) <= threshold.units() * den.units();
}

bool ratio_below(const Decimal& num, const Decimal& den, const Decimal& threshold) {
  return num.units() * pow10(Decimal::kScale) < threshold.units() * den.units();
}

double ratio_to_double(const Decimal& num, const Decimal& den) {
  if (den.units() <= 0) throw std::invalid_argument("ratio denominator must be positive");
  // 10^36 / den keeps 18 significant decimal digits for ratios near or below one.
  try {
    Rep scaled = num.units() * pow10(2 * Decimal::kScale) / den.units();
    return scaled.convert_to<double>() / 1e36;
  } catch (const std::overflow_error&) {
    return num.to_double() / den.to_double();
  }
}

}  // namespace xarb
