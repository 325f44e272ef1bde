// Differential-polynomial kernel: canonical expressions in unspecified
// functions and their partial derivatives, graded by powers of the grid
// spacing h, with exact rational coefficients.
//
// A ContinuumExpr is a multiset of monomials
//     coeff * h^p * prod(param^e) * prod(indeterminate^e)
// where an indeterminate is a function together with a derivative
// multi-index (mixed derivatives are indeterminates of their own, distinct
// from every pure derivative). All operations are pure; normalized
// expressions carry their monomials merged, scrubbed of zeros and sorted
// under the canonical order below.
#pragma once

#include "mfderive/rational.hpp"

#include <algorithm>
#include <compare>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mfderive {

struct VarId {
    std::string name;
    int index = 0;

    friend auto operator<=>(const VarId&, const VarId&) = default;
};

struct ParamSymbol {
    std::string name;

    friend auto operator<=>(const ParamSymbol&, const ParamSymbol&) = default;
};

// A function symbol together with one derivative order per variable.
struct DerivativeIndeterminate {
    std::string func;
    std::vector<int> orders;

    int total_order() const {
        int s = 0;
        for (int o : orders) s += o;
        return s;
    }

    bool is_pure_in(int var_index) const {
        for (std::size_t i = 0; i < orders.size(); ++i) {
            if (static_cast<int>(i) != var_index && orders[i] != 0) return false;
        }
        return var_index >= 0 && var_index < static_cast<int>(orders.size()) &&
               orders[var_index] > 0;
    }

    friend auto operator<=>(const DerivativeIndeterminate&,
                            const DerivativeIndeterminate&) = default;
};

struct ContinuumMonomial {
    Rational coeff;
    int h_power = 0;
    std::map<ParamSymbol, int> params;
    std::map<DerivativeIndeterminate, int> dterms;

    int dterm_degree() const {
        int s = 0;
        for (const auto& [t, e] : dterms) s += e;
        return s;
    }
};

namespace detail {

template <typename Map>
int compare_exponent_maps(const Map& a, const Map& b) {
    auto ia = a.begin();
    auto ib = b.begin();
    for (; ia != a.end() && ib != b.end(); ++ia, ++ib) {
        if (ia->first < ib->first) return -1;
        if (ib->first < ia->first) return 1;
        if (ia->second != ib->second) return ia->second < ib->second ? -1 : 1;
    }
    if (ia != a.end()) return 1;
    if (ib != b.end()) return -1;
    return 0;
}

// Canonical monomial-key order: h grading, then total derivative degree,
// then the indeterminate map, then the parameter map. Like monomials
// compare equal (coefficient excluded).
inline int compare_monomial_keys(const ContinuumMonomial& a, const ContinuumMonomial& b) {
    if (a.h_power != b.h_power) return a.h_power < b.h_power ? -1 : 1;
    const int da = a.dterm_degree();
    const int db = b.dterm_degree();
    if (da != db) return da < db ? -1 : 1;
    if (int c = compare_exponent_maps(a.dterms, b.dterms); c != 0) return c;
    return compare_exponent_maps(a.params, b.params);
}

} // namespace detail

class ContinuumExpr {
public:
    std::vector<ContinuumMonomial> monomials;

    ContinuumExpr() = default;
    explicit ContinuumExpr(std::vector<ContinuumMonomial> ms) : monomials(std::move(ms)) {}

    static ContinuumExpr zero() { return {}; }

    static ContinuumExpr constant(Rational c) {
        ContinuumExpr e;
        if (c != 0) {
            e.monomials.push_back(ContinuumMonomial{std::move(c), 0, {}, {}});
        }
        return e;
    }

    static ContinuumExpr constant(long num, long den = 1) {
        return constant(make_rational(num, den));
    }

    static ContinuumExpr parameter(std::string name) {
        ContinuumMonomial m{Rational(1), 0, {}, {}};
        m.params[ParamSymbol{std::move(name)}] = 1;
        return ContinuumExpr({std::move(m)});
    }

    static ContinuumExpr grid_h(int power = 1) {
        if (power < 0) throw std::invalid_argument("grid_h: negative power");
        return ContinuumExpr({ContinuumMonomial{Rational(1), power, {}, {}}});
    }

    // The bare (underived) function of `dim` continuum variables.
    static ContinuumExpr function(std::string func, int dim) {
        return derivative(std::move(func), std::vector<int>(static_cast<std::size_t>(dim), 0));
    }

    static ContinuumExpr derivative(std::string func, std::vector<int> orders) {
        ContinuumMonomial m{Rational(1), 0, {}, {}};
        m.dterms[DerivativeIndeterminate{std::move(func), std::move(orders)}] = 1;
        return ContinuumExpr({std::move(m)});
    }

    bool empty() const { return monomials.empty(); }
};

// Formal evaluation point: values for parameters, for h, and for every
// derivative indeterminate (a jet). Jet entries need no consistency with
// one another; they are free coordinates.
struct JetPoint {
    std::map<ParamSymbol, Rational> param_values;
    Rational h_value = 0;
    std::map<DerivativeIndeterminate, Rational> jet;
};

struct MissingAssignmentError : std::runtime_error {
    std::string symbol;

    explicit MissingAssignmentError(std::string sym)
        : std::runtime_error("no value assigned to '" + sym + "'"), symbol(std::move(sym)) {}
};

inline ContinuumExpr normalize(const ContinuumExpr& e);

// ---- ring operations ----------------------------------------------------

inline ContinuumExpr add(const ContinuumExpr& a, const ContinuumExpr& b) {
    ContinuumExpr out;
    out.monomials.reserve(a.monomials.size() + b.monomials.size());
    out.monomials.insert(out.monomials.end(), a.monomials.begin(), a.monomials.end());
    out.monomials.insert(out.monomials.end(), b.monomials.begin(), b.monomials.end());
    return normalize(out);
}

inline ContinuumExpr scale(const ContinuumExpr& a, const Rational& c) {
    if (c == 0) return {};
    ContinuumExpr out = a;
    for (auto& m : out.monomials) m.coeff *= c;
    return normalize(out);
}

inline ContinuumExpr neg(const ContinuumExpr& a) { return scale(a, Rational(-1)); }

inline ContinuumExpr sub(const ContinuumExpr& a, const ContinuumExpr& b) {
    return add(a, scale(b, Rational(-1)));
}

namespace detail {

inline ContinuumMonomial mul_monomials(const ContinuumMonomial& a, const ContinuumMonomial& b) {
    ContinuumMonomial m;
    m.coeff = a.coeff * b.coeff;
    m.h_power = a.h_power + b.h_power;
    m.params = a.params;
    for (const auto& [p, e] : b.params) m.params[p] += e;
    m.dterms = a.dterms;
    for (const auto& [t, e] : b.dterms) m.dterms[t] += e;
    return m;
}

} // namespace detail

// Product; monomial pairs whose combined h power reaches `h_bound` are
// skipped (h_bound < 0 disables the cutoff). The bounded form lets callers
// interleave truncation with expansion instead of expanding everything.
inline ContinuumExpr mul(const ContinuumExpr& a, const ContinuumExpr& b, int h_bound = -1) {
    ContinuumExpr out;
    out.monomials.reserve(a.monomials.size() * b.monomials.size());
    for (const auto& ma : a.monomials) {
        for (const auto& mb : b.monomials) {
            if (h_bound >= 0 && ma.h_power + mb.h_power >= h_bound) continue;
            out.monomials.push_back(detail::mul_monomials(ma, mb));
        }
    }
    return normalize(out);
}

inline ContinuumExpr operator+(const ContinuumExpr& a, const ContinuumExpr& b) { return add(a, b); }
inline ContinuumExpr operator-(const ContinuumExpr& a, const ContinuumExpr& b) { return sub(a, b); }
inline ContinuumExpr operator*(const ContinuumExpr& a, const ContinuumExpr& b) { return mul(a, b); }
inline ContinuumExpr operator-(const ContinuumExpr& a) { return neg(a); }
inline ContinuumExpr operator*(const Rational& c, const ContinuumExpr& a) { return scale(a, c); }
inline ContinuumExpr operator*(const ContinuumExpr& a, const Rational& c) { return scale(a, c); }

// Merges like monomials, drops zero coefficients and zero exponents, sorts
// canonically. Idempotent; the zero expression is the empty monomial set.
inline ContinuumExpr normalize(const ContinuumExpr& e) {
    std::vector<ContinuumMonomial> ms = e.monomials;
    for (auto& m : ms) {
        std::erase_if(m.params, [](const auto& kv) { return kv.second == 0; });
        std::erase_if(m.dterms, [](const auto& kv) { return kv.second == 0; });
    }
    std::sort(ms.begin(), ms.end(), [](const ContinuumMonomial& a, const ContinuumMonomial& b) {
        return detail::compare_monomial_keys(a, b) < 0;
    });
    ContinuumExpr out;
    out.monomials.reserve(ms.size());
    for (auto& m : ms) {
        if (!out.monomials.empty() &&
            detail::compare_monomial_keys(out.monomials.back(), m) == 0) {
            out.monomials.back().coeff += m.coeff;
        } else {
            out.monomials.push_back(std::move(m));
        }
    }
    std::erase_if(out.monomials, [](const ContinuumMonomial& m) { return m.coeff == 0; });
    return out;
}

inline bool equal(const ContinuumExpr& a, const ContinuumExpr& b) {
    return normalize(sub(a, b)).empty();
}

// ---- differentiation and coefficient extraction ---------------------------

// Total derivative with respect to variable v: Leibniz over monomials;
// h, parameters and rational coefficients are constants, and differentiating
// an indeterminate bumps its multi-index by one in v.
inline ContinuumExpr total_derivative(const ContinuumExpr& e, const VarId& v) {
    ContinuumExpr out;
    for (const auto& m : e.monomials) {
        for (const auto& [t, exp] : m.dterms) {
            if (v.index < 0 || v.index >= static_cast<int>(t.orders.size())) {
                throw std::out_of_range("total_derivative: variable index " +
                                        std::to_string(v.index) + " out of range for '" +
                                        t.func + "'");
            }
            ContinuumMonomial d = m;
            d.coeff *= exp;
            if (--d.dterms[t] == 0) d.dterms.erase(t);
            DerivativeIndeterminate bumped = t;
            bumped.orders[static_cast<std::size_t>(v.index)] += 1;
            d.dterms[bumped] += 1;
            out.monomials.push_back(std::move(d));
        }
    }
    return normalize(out);
}

// Sum of the monomials in which `t` occurs with exponent exactly m, each
// divided by t^m (m = 0 selects the t-free part). The result never
// contains t; matching is exact, so a mixed derivative never matches a
// pure one.
inline ContinuumExpr coefficient_of_power(const ContinuumExpr& e,
                                          const DerivativeIndeterminate& t, int m) {
    if (m < 0) throw std::invalid_argument("coefficient_of_power: negative exponent");
    ContinuumExpr out;
    for (const auto& mono : e.monomials) {
        const auto it = mono.dterms.find(t);
        const int exp = it == mono.dterms.end() ? 0 : it->second;
        if (exp != m) continue;
        ContinuumMonomial stripped = mono;
        stripped.dterms.erase(t);
        out.monomials.push_back(std::move(stripped));
    }
    return normalize(out);
}

inline int highest_exponent(const ContinuumExpr& e, const DerivativeIndeterminate& t) {
    int best = 0;
    for (const auto& mono : e.monomials) {
        const auto it = mono.dterms.find(t);
        if (it != mono.dterms.end() && it->second > best) best = it->second;
    }
    return best;
}

// Largest i such that a pure derivative of order i in v occurs in e for
// some function; mixed derivatives do not contribute.
inline int highest_pure_order(const ContinuumExpr& e, const VarId& v) {
    int best = 0;
    for (const auto& mono : e.monomials) {
        for (const auto& [t, exp] : mono.dterms) {
            if (t.is_pure_in(v.index) && t.orders[static_cast<std::size_t>(v.index)] > best) {
                best = t.orders[static_cast<std::size_t>(v.index)];
            }
        }
    }
    return best;
}

// Drops every monomial with h power >= k.
inline ContinuumExpr reduce_mod_h(const ContinuumExpr& e, int k) {
    ContinuumExpr out;
    for (const auto& m : e.monomials) {
        if (m.h_power < k) out.monomials.push_back(m);
    }
    return normalize(out);
}

// Coefficient of h^p, with the h factor removed.
inline ContinuumExpr h_coefficient(const ContinuumExpr& e, int p) {
    ContinuumExpr out;
    for (const auto& m : e.monomials) {
        if (m.h_power == p) {
            ContinuumMonomial c = m;
            c.h_power = 0;
            out.monomials.push_back(std::move(c));
        }
    }
    return normalize(out);
}

// Divides by h^s; caller guarantees every monomial has h power >= s.
inline ContinuumExpr divide_h_power(const ContinuumExpr& e, int s) {
    ContinuumExpr out = e;
    for (auto& m : out.monomials) {
        if (m.h_power < s) {
            throw std::domain_error("divide_h_power: monomial of h order " +
                                    std::to_string(m.h_power) + " < " + std::to_string(s));
        }
        m.h_power -= s;
    }
    return normalize(out);
}

// Partial evaluation of one parameter at an exact value.
inline ContinuumExpr substitute_param(const ContinuumExpr& e, const std::string& name,
                                      const Rational& value) {
    const ParamSymbol p{name};
    ContinuumExpr out;
    for (const auto& m : e.monomials) {
        ContinuumMonomial s = m;
        const auto it = s.params.find(p);
        if (it != s.params.end()) {
            for (int i = 0; i < it->second; ++i) s.coeff *= value;
            s.params.erase(it);
        }
        out.monomials.push_back(std::move(s));
    }
    return normalize(out);
}

namespace detail {

inline Rational rational_pow(const Rational& base, int exp) {
    Rational acc(1);
    for (int i = 0; i < exp; ++i) acc *= base;
    return acc;
}

} // namespace detail

// Exact evaluation under a jet; term-by-term, so it is also meaningful on
// unnormalized expressions. Throws MissingAssignmentError for any parameter
// or indeterminate without a value.
inline Rational eval_at_jet(const ContinuumExpr& e, const JetPoint& p) {
    Rational total(0);
    for (const auto& m : e.monomials) {
        Rational v = m.coeff;
        v *= detail::rational_pow(p.h_value, m.h_power);
        for (const auto& [par, exp] : m.params) {
            const auto it = p.param_values.find(par);
            if (it == p.param_values.end()) throw MissingAssignmentError(par.name);
            v *= detail::rational_pow(it->second, exp);
        }
        for (const auto& [t, exp] : m.dterms) {
            const auto it = p.jet.find(t);
            if (it == p.jet.end()) {
                std::string sym = t.func + "(";
                for (std::size_t i = 0; i < t.orders.size(); ++i) {
                    sym += (i ? "," : "") + std::to_string(t.orders[i]);
                }
                throw MissingAssignmentError(sym + ")");
            }
            v *= detail::rational_pow(it->second, exp);
        }
        total += v;
    }
    return total;
}

} // namespace mfderive
