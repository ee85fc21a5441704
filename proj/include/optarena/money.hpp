#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace optarena {

// Exact decimal money in integer picodollars (1e-12 USD).
//
// Prices are configured in USD per 1M tokens. One picodollar per token equals
// one micro-dollar per 1M tokens, so per-call cost
//   cost = tokens * price_per_token
// is exact integer arithmetic with no rounding, and ledger sums reconcile to
// the last digit.
class Money {
 public:
  constexpr Money() = default;
  static constexpr Money from_picos(std::int64_t picos) { return Money(picos); }
  static constexpr Money zero() { return Money(0); }

  // Parses a decimal USD string like "2.00" or "0.000001". Up to 12
  // fractional digits; more is rejected rather than silently rounded.
  static Money parse_usd(std::string_view s) {
    if (s.empty()) throw std::invalid_argument("empty money literal");
    bool negative = false;
    std::size_t i = 0;
    if (s[0] == '-') { negative = true; i = 1; }
    std::int64_t whole = 0, frac = 0;
    int frac_digits = 0;
    bool seen_dot = false, seen_digit = false;
    for (; i < s.size(); ++i) {
      char c = s[i];
      if (c == '.') {
        if (seen_dot) throw std::invalid_argument("malformed money literal");
        seen_dot = true;
        continue;
      }
      if (c < '0' || c > '9') throw std::invalid_argument("malformed money literal");
      seen_digit = true;
      if (!seen_dot) {
        whole = whole * 10 + (c - '0');
      } else {
        if (++frac_digits > 12) throw std::invalid_argument("money literal exceeds picodollar precision");
        frac = frac * 10 + (c - '0');
      }
    }
    if (!seen_digit) throw std::invalid_argument("malformed money literal");
    for (int d = frac_digits; d < 12; ++d) frac *= 10;
    std::int64_t picos = whole * 1'000'000'000'000LL + frac;
    return Money(negative ? -picos : picos);
  }

  constexpr std::int64_t picos() const { return picos_; }
  double usd() const { return static_cast<double>(picos_) / 1e12; }

  // Exact decimal rendering, trailing zeros trimmed ("0.006", "2", "0").
  std::string to_usd_string() const {
    std::int64_t p = picos_;
    std::string sign;
    if (p < 0) { sign = "-"; p = -p; }
    std::int64_t whole = p / 1'000'000'000'000LL;
    std::int64_t frac = p % 1'000'000'000'000LL;
    std::string out = sign + std::to_string(whole);
    if (frac != 0) {
      std::string f = std::to_string(frac);
      f.insert(f.begin(), 12 - f.size(), '0');
      while (!f.empty() && f.back() == '0') f.pop_back();
      out += "." + f;
    }
    return out;
  }

  constexpr Money operator+(Money o) const { return Money(picos_ + o.picos_); }
  constexpr Money operator-(Money o) const { return Money(picos_ - o.picos_); }
  constexpr Money& operator+=(Money o) { picos_ += o.picos_; return *this; }
  constexpr bool operator==(const Money&) const = default;
  constexpr auto operator<=>(const Money&) const = default;

 private:
  constexpr explicit Money(std::int64_t picos) : picos_(picos) {}
  std::int64_t picos_ = 0;
};

// Per-token price in picodollars (numerically equal to USD-per-1M-tokens
// scaled by 1e6, i.e. micro-dollars per 1M tokens).
struct Pricing {
  std::int64_t prompt_picos_per_token = 0;
  std::int64_t completion_picos_per_token = 0;

  // usd_per_million like "2.00" means $2.00 per 1M tokens.
  static Pricing per_million_usd(std::string_view prompt_usd, std::string_view completion_usd) {
    Pricing p;
    p.prompt_picos_per_token = Money::parse_usd(prompt_usd).picos() / 1'000'000;
    p.completion_picos_per_token = Money::parse_usd(completion_usd).picos() / 1'000'000;
    if (p.prompt_picos_per_token < 0 || p.completion_picos_per_token < 0)
      throw std::invalid_argument("pricing must be non-negative");
    return p;
  }

  Money cost(std::int64_t prompt_tokens, std::int64_t completion_tokens) const {
    return Money::from_picos(prompt_tokens * prompt_picos_per_token +
                             completion_tokens * completion_picos_per_token);
  }
};

}  // namespace optarena
