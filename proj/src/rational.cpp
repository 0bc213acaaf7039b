#include "forge/rational.hpp"

#include <limits>
#include <numeric>

#include "forge/error.hpp"

namespace forge {
namespace {

Rational from_wide(__int128 num, __int128 den) {
  if (den == 0) throw Error(ErrorCode::kInvalidArgument, "zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  __int128 a = num < 0 ? -num : num;
  __int128 b = den;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  constexpr auto kMax = std::numeric_limits<std::int64_t>::max();
  if (num > kMax || -num > kMax || den > kMax) {
    throw Error(ErrorCode::kOutOfRange, "rational overflow");
  }
  return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
  if (den_ == 0) throw Error(ErrorCode::kInvalidArgument, "zero denominator");
  if (den_ < 0) {
    num_ = -num_;
    den_ = -den_;
  }
  const auto g = std::gcd(num_, den_);
  if (g > 1) {
    num_ /= g;
    den_ /= g;
  }
}

std::string Rational::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational operator+(const Rational& a, const Rational& b) {
  return from_wide(static_cast<__int128>(a.num_) * b.den_ +
                       static_cast<__int128>(b.num_) * a.den_,
                   static_cast<__int128>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b) {
  return from_wide(static_cast<__int128>(a.num_) * b.num_,
                   static_cast<__int128>(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
  if (b.num_ == 0) throw Error(ErrorCode::kInvalidArgument, "division by zero");
  return from_wide(static_cast<__int128>(a.num_) * b.den_,
                   static_cast<__int128>(a.den_) * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
  const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

Rational Rational::parse(const std::string& text) {
  try {
    if (auto slash = text.find('/'); slash != std::string::npos) {
      return Rational(std::stoll(text.substr(0, slash)),
                      std::stoll(text.substr(slash + 1)));
    }
    if (auto dot = text.find('.'); dot != std::string::npos) {
      const std::string frac = text.substr(dot + 1);
      if (frac.size() > 15) throw Error(ErrorCode::kParse, "too many decimals");
      std::int64_t scale = 1;
      for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
      const bool negative = !text.empty() && text[0] == '-';
      const std::string whole = text.substr(0, dot);
      std::int64_t w = (whole.empty() || whole == "-") ? 0 : std::stoll(whole);
      std::int64_t f = frac.empty() ? 0 : std::stoll(frac);
      std::int64_t num = (w < 0 ? -w : w) * scale + f;
      return Rational(negative ? -num : num, scale);
    }
    return Rational(std::stoll(text));
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kParse, "not a rational: '" + text + "'");
  }
}

void to_json(nlohmann::json& j, const Rational& r) {
  j = nlohmann::json::array({r.num(), r.den()});
}

void from_json(const nlohmann::json& j, Rational& r) {
  if (j.is_array() && j.size() == 2) {
    r = Rational(j[0].get<std::int64_t>(), j[1].get<std::int64_t>());
  } else if (j.is_number_integer()) {
    r = Rational(j.get<std::int64_t>());
  } else if (j.is_string()) {
    r = Rational::parse(j.get<std::string>());
  } else {
    throw Error(ErrorCode::kParse, "rational must be [num, den], integer or string");
  }
}

}  // namespace forge
