// Human-readable rendering: LaTeX (\partial_x notation) and plain text
// (dx()/dy() prefix notation) for expressions and decompositions.
#pragma once

#include "mfderive/conserve.hpp"
#include "mfderive/symexpr.hpp"

#include <cctype>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfderive {

namespace detail {

inline std::string latex_symbol(const std::string& name) {
    static const std::set<std::string> greek = {
        "alpha", "beta",    "gamma", "delta", "epsilon", "zeta", "eta",   "theta",
        "iota",  "kappa",   "lambda", "mu",   "nu",      "xi",   "pi",    "rho",
        "sigma", "tau",     "upsilon", "phi", "chi",     "psi",  "omega", "varepsilon"};
    std::size_t split = name.size();
    while (split > 0 && std::isdigit(static_cast<unsigned char>(name[split - 1]))) --split;
    const std::string base = name.substr(0, split);
    const std::string digits = name.substr(split);
    std::string out = greek.count(base) ? "\\" + base : base;
    if (!digits.empty()) out += "_{" + digits + "}";
    return out;
}

inline void check_arity(const DerivativeIndeterminate& t, const std::vector<std::string>& vars) {
    if (t.orders.size() != vars.size()) {
        throw std::invalid_argument("render: expression uses " + std::to_string(t.orders.size()) +
                                    " variables, but " + std::to_string(vars.size()) +
                                    " were named");
    }
}

inline std::string latex_dterm(const DerivativeIndeterminate& t,
                               const std::vector<std::string>& vars) {
    check_arity(t, vars);
    std::string out;
    for (std::size_t v = 0; v < t.orders.size(); ++v) {
        if (t.orders[v] == 0) continue;
        out += "\\partial_" + vars[v];
        if (t.orders[v] > 1) out += "^{" + std::to_string(t.orders[v]) + "}";
    }
    return out + t.func;
}

inline std::string text_dterm(const DerivativeIndeterminate& t,
                              const std::vector<std::string>& vars) {
    check_arity(t, vars);
    std::string out = t.func;
    for (std::size_t v = t.orders.size(); v-- > 0;) {
        if (t.orders[v] == 0) continue;
        std::string op = "d" + vars[v];
        if (t.orders[v] > 1) op += "^" + std::to_string(t.orders[v]);
        out = op + "(" + out + ")";
    }
    return out;
}

} // namespace detail

inline std::string render_latex(const ContinuumExpr& e, const std::vector<std::string>& vars) {
    const ContinuumExpr n = normalize(e);
    if (n.empty()) return "0";
    std::string out;
    for (std::size_t k = 0; k < n.monomials.size(); ++k) {
        const auto& m = n.monomials[k];
        const bool negative = m.coeff < 0;
        const Rational mag = negative ? Rational(-m.coeff) : m.coeff;
        if (k == 0) {
            if (negative) out += "-";
        } else {
            out += negative ? " - " : " + ";
        }
        std::vector<std::string> factors;
        if (m.h_power > 0) {
            factors.push_back(m.h_power == 1 ? "h" : "h^{" + std::to_string(m.h_power) + "}");
        }
        for (const auto& [p, exp] : m.params) {
            std::string f = detail::latex_symbol(p.name);
            if (exp > 1) f += "^{" + std::to_string(exp) + "}";
            factors.push_back(std::move(f));
        }
        for (const auto& [t, exp] : m.dterms) {
            std::string f = detail::latex_dterm(t, vars);
            if (exp > 1) {
                if (t.total_order() > 0) f = "\\left(" + f + "\\right)";
                f += "^{" + std::to_string(exp) + "}";
            }
            factors.push_back(std::move(f));
        }
        std::string body;
        if (factors.empty() || mag != 1) {
            body = denominator(mag) == 1
                       ? numerator(mag).str()
                       : "\\frac{" + numerator(mag).str() + "}{" + denominator(mag).str() + "}";
        }
        for (const auto& f : factors) {
            if (!body.empty()) body += " ";
            body += f;
        }
        out += body;
    }
    return out;
}

inline std::string render_text(const ContinuumExpr& e, const std::vector<std::string>& vars) {
    const ContinuumExpr n = normalize(e);
    if (n.empty()) return "0";
    std::string out;
    for (std::size_t k = 0; k < n.monomials.size(); ++k) {
        const auto& m = n.monomials[k];
        const bool negative = m.coeff < 0;
        const Rational mag = negative ? Rational(-m.coeff) : m.coeff;
        if (k == 0) {
            if (negative) out += "-";
        } else {
            out += negative ? " - " : " + ";
        }
        std::vector<std::string> factors;
        if (m.h_power > 0) {
            factors.push_back(m.h_power == 1 ? "h" : "h^" + std::to_string(m.h_power));
        }
        for (const auto& [p, exp] : m.params) {
            factors.push_back(exp == 1 ? p.name : p.name + "^" + std::to_string(exp));
        }
        for (const auto& [t, exp] : m.dterms) {
            std::string f = detail::text_dterm(t, vars);
            if (exp > 1) f += "^" + std::to_string(exp);
            factors.push_back(std::move(f));
        }
        std::string body;
        if (factors.empty() || mag != 1) {
            body = numerator(mag).str();
            if (denominator(mag) != 1) body += "/" + denominator(mag).str();
        }
        for (const auto& f : factors) {
            if (!body.empty()) body += "*";
            body += f;
        }
        out += body;
    }
    return out;
}

namespace detail {

inline std::string join_sum(const std::vector<std::string>& pieces) {
    if (pieces.empty()) return "0";
    std::string out = pieces[0];
    for (std::size_t i = 1; i < pieces.size(); ++i) {
        if (pieces[i].starts_with("-")) {
            out += " - " + pieces[i].substr(1);
        } else {
            out += " + " + pieces[i];
        }
    }
    return out;
}

} // namespace detail

inline std::string render_latex(const Decomposition& dec, const std::vector<std::string>& vars) {
    std::vector<std::string> pieces;
    for (const auto& part : dec.parts) {
        pieces.push_back("\\partial_" + part.var.name + "\\left(" +
                         render_latex(part.inner, vars) + "\\right)");
    }
    if (!normalize(dec.remainder).empty()) {
        pieces.push_back(render_latex(dec.remainder, vars));
    }
    return detail::join_sum(pieces);
}

inline std::string render_text(const Decomposition& dec, const std::vector<std::string>& vars) {
    std::vector<std::string> pieces;
    for (const auto& part : dec.parts) {
        pieces.push_back("d" + part.var.name + "(" + render_text(part.inner, vars) + ")");
    }
    if (!normalize(dec.remainder).empty()) {
        pieces.push_back(render_text(dec.remainder, vars));
    }
    return detail::join_sum(pieces);
}

} // namespace mfderive
