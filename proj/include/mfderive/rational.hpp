// Exact rational arithmetic used throughout the kernel.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace mfderive {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Canonical construction from a numerator/denominator pair. cpp_rational's
// own two-argument constructor is (value, precision), so never use it.
inline Rational make_rational(Integer num, Integer den = 1) {
    if (den == 0) {
        throw std::domain_error("make_rational: zero denominator");
    }
    return Rational(std::move(num)) / Rational(std::move(den));
}

// Renders as "num/den" in lowest terms with positive denominator ("5/1", "-1/2").
inline std::string rational_to_string(const Rational& r) {
    return numerator(r).str() + "/" + denominator(r).str();
}

// Accepts "num", "num/den", optional leading '-'; used by the s-expression reader.
inline Rational parse_rational(std::string_view text) {
    auto bad = [&] { throw std::invalid_argument("not a rational: '" + std::string(text) + "'"); };
    if (text.empty()) {
        bad();
    }
    const auto slash = text.find('/');
    const std::string_view num_part = text.substr(0, slash);
    auto check_int = [&](std::string_view s, bool allow_sign) {
        if (s.empty()) {
            bad();
        }
        std::size_t i = (allow_sign && s[0] == '-') ? 1 : 0;
        if (i == s.size()) {
            bad();
        }
        for (; i < s.size(); ++i) {
            if (s[i] < '0' || s[i] > '9') {
                bad();
            }
        }
    };
    check_int(num_part, true);
    Integer num{std::string(num_part)};
    if (slash == std::string_view::npos) {
        return Rational(num);
    }
    const std::string_view den_part = text.substr(slash + 1);
    check_int(den_part, false);
    Integer den{std::string(den_part)};
    if (den == 0) {
        throw std::invalid_argument("zero denominator in rational: '" + std::string(text) + "'");
    }
    return make_rational(num, den);
}

} // namespace mfderive
