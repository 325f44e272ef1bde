// Recursive-descent parser for the transition-rate grammar:
//
//   expr   := term (("+"|"-") term)*
//   term   := factor ("*" factor)*
//   factor := base ("^" nat)?
//   base   := rat | ident | ident "(" int ("," int)* ")" | "(" expr ")"
//   rat    := ["-"] nat ("/" nat)?
//
// Bare identifiers resolve to parameters; applied identifiers to species or
// alias occurrences. Alias bodies use the same grammar with occurrences
// written without offsets (implicitly offset 0); alias applications in a
// rate shift the expanded body by the given offset.
#pragma once

#include "mfderive/lattice.hpp"

#include <cctype>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfderive {

struct RateParseError : std::runtime_error {
    std::size_t position;

    RateParseError(std::string msg, std::size_t pos)
        : std::runtime_error(msg + " (at offset " + std::to_string(pos) + ")"),
          position(pos) {}
};

struct RateGrammarContext {
    int dimension = 0;
    std::set<std::string> species;
    std::set<std::string> parameters;
    const std::map<std::string, LatticeExpr>* aliases = nullptr;
    bool allow_offsets = true; // false inside alias bodies
};

namespace detail {

class RateParser {
public:
    RateParser(const std::string& src, const RateGrammarContext& ctx) : src_(src), ctx_(ctx) {}

    LatticeExpr run() {
        LatticeExpr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) {
            fail("unexpected trailing input");
        }
        return e;
    }

private:
    const std::string& src_;
    const RateGrammarContext& ctx_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw RateParseError(msg, pos_); }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool peek_is(char c) {
        skip_ws();
        return pos_ < src_.size() && src_[pos_] == c;
    }

    bool accept(char c) {
        if (peek_is(c)) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    LatticeExpr parse_expr() {
        LatticeExpr e = parse_term();
        for (;;) {
            if (accept('+')) {
                e = add(e, parse_term());
            } else if (accept('-')) {
                e = sub(e, parse_term());
            } else {
                return e;
            }
        }
    }

    LatticeExpr parse_term() {
        LatticeExpr e = parse_factor();
        while (accept('*')) e = mul(e, parse_factor());
        return e;
    }

    LatticeExpr parse_factor() {
        LatticeExpr base = parse_base();
        if (!accept('^')) return base;
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == '-') fail("negative exponent");
        const long n = parse_nat("exponent");
        if (pos_ < src_.size() && src_[pos_] == '/') fail("fractional exponent");
        if (n > 64) fail("exponent too large");
        LatticeExpr acc = LatticeExpr::constant(1);
        for (long i = 0; i < n; ++i) acc = mul(acc, base);
        return acc;
    }

    LatticeExpr parse_base() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of input");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            LatticeExpr e = parse_expr();
            expect(')');
            return e;
        }
        if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
            return LatticeExpr::constant(parse_rat());
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            return parse_identifier_use();
        }
        fail("expected a number, identifier or '('");
    }

    long parse_nat(const char* what) {
        skip_ws();
        if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            fail(std::string("expected ") + what);
        }
        long v = 0;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            v = v * 10 + (src_[pos_] - '0');
            if (v > 1000000000L) fail("number too large");
            ++pos_;
        }
        return v;
    }

    Rational parse_rat() {
        skip_ws();
        bool negative = false;
        if (pos_ < src_.size() && src_[pos_] == '-') {
            negative = true;
            ++pos_;
        }
        const long num = parse_nat("number");
        long den = 1;
        if (pos_ < src_.size() && src_[pos_] == '/') {
            ++pos_;
            den = parse_nat("denominator");
            if (den == 0) fail("zero denominator");
        }
        return make_rational(negative ? -num : num, den);
    }

    long parse_int() {
        skip_ws();
        bool negative = false;
        if (pos_ < src_.size() && src_[pos_] == '-') {
            negative = true;
            ++pos_;
        }
        const long v = parse_nat("integer");
        return negative ? -v : v;
    }

    LatticeExpr parse_identifier_use() {
        const std::size_t start = pos_;
        std::string name;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            name += src_[pos_++];
        }
        const bool is_species = ctx_.species.count(name) > 0;
        const bool is_alias = ctx_.aliases != nullptr && ctx_.aliases->count(name) > 0;
        const bool is_param = ctx_.parameters.count(name) > 0;

        if (peek_is('(')) {
            if (!ctx_.allow_offsets) {
                pos_ = start;
                fail("offsets are not allowed in alias definitions");
            }
            if (is_param) {
                pos_ = start;
                fail("parameter '" + name + "' cannot take an offset list");
            }
            if (!is_species && !is_alias) {
                pos_ = start;
                fail("unknown identifier '" + name + "'");
            }
            expect('(');
            std::vector<int> offset;
            offset.push_back(static_cast<int>(parse_int()));
            while (accept(',')) offset.push_back(static_cast<int>(parse_int()));
            expect(')');
            if (static_cast<int>(offset.size()) != ctx_.dimension) {
                pos_ = start;
                fail("offset arity mismatch for '" + name + "': got " +
                     std::to_string(offset.size()) + ", model dimension is " +
                     std::to_string(ctx_.dimension));
            }
            if (is_species) return LatticeExpr::occurrence(name, offset);
            return shift(ctx_.aliases->at(name), offset);
        }

        if (is_param) return LatticeExpr::parameter(name);
        if (!ctx_.allow_offsets && (is_species || is_alias)) {
            // Alias bodies: occurrences written without offsets mean offset 0.
            if (is_species) {
                return LatticeExpr::occurrence(
                    name, std::vector<int>(static_cast<std::size_t>(ctx_.dimension), 0));
            }
            return ctx_.aliases->at(name);
        }
        pos_ = start;
        if (is_species || is_alias) {
            fail("'" + name + "' needs an offset list, e.g. " + name + "(0" +
                 (ctx_.dimension > 1 ? ",0)" : ")"));
        }
        fail("unknown identifier '" + name + "'");
    }
};

} // namespace detail

inline LatticeExpr parse_rate_expr(const std::string& src, const RateGrammarContext& ctx) {
    return detail::RateParser(src, ctx).run();
}

// Parses a transition rate against a model's declarations; aliases are
// expanded and the result is normalized.
inline LatticeExpr parse_rate(const std::string& src, const Model& m) {
    RateGrammarContext ctx;
    ctx.dimension = m.dimension;
    ctx.species.insert(m.species.begin(), m.species.end());
    ctx.parameters.insert(m.parameters.begin(), m.parameters.end());
    ctx.aliases = &m.aliases;
    ctx.allow_offsets = true;
    return parse_rate_expr(src, ctx);
}

// Renders a lattice expression back into the rate grammar; parsing the
// result against the same declarations reproduces the expression.
inline std::string render_rate(const LatticeExpr& e) {
    const LatticeExpr n = normalize(e);
    if (n.empty()) return "0";
    std::string out;
    for (std::size_t k = 0; k < n.monomials.size(); ++k) {
        const auto& m = n.monomials[k];
        const bool first = k == 0;
        const bool negative = m.coeff < 0;
        const Rational mag = negative ? Rational(-m.coeff) : m.coeff;
        if (first) {
            // A leading minus is only valid grammar inside a numeric literal,
            // so a negative head monomial always carries its coefficient.
            if (negative) out += "-";
        } else {
            out += negative ? " - " : " + ";
        }
        std::vector<std::string> factors;
        const bool bare = m.params.empty() && m.occs.empty();
        if (bare || mag != 1 || (first && negative)) {
            std::string c = numerator(mag).str();
            if (denominator(mag) != 1) c += "/" + denominator(mag).str();
            factors.push_back(c);
        }
        for (const auto& [p, exp] : m.params) {
            factors.push_back(exp == 1 ? p.name : p.name + "^" + std::to_string(exp));
        }
        for (const auto& [o, exp] : m.occs) {
            std::string f = o.species + "(";
            for (std::size_t i = 0; i < o.offset.size(); ++i) {
                f += (i ? "," : "") + std::to_string(o.offset[i]);
            }
            f += ")";
            if (exp != 1) f += "^" + std::to_string(exp);
            factors.push_back(f);
        }
        for (std::size_t i = 0; i < factors.size(); ++i) {
            out += (i ? "*" : "") + factors[i];
        }
    }
    return out;
}

} // namespace mfderive
