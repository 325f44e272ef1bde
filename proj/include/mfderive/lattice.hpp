// Lattice-model representation: polynomials in species occupancies at
// integer offsets, declarative hopping models, and the master-equation
// right-hand side builder.
#pragma once

#include "mfderive/symexpr.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfderive {

// One species occupancy at an integer lattice offset relative to the
// current site, e.g. r at (+2, 0).
struct Occurrence {
    std::string species;
    std::vector<int> offset;

    friend auto operator<=>(const Occurrence&, const Occurrence&) = default;
};

struct LatticeMonomial {
    Rational coeff;
    std::map<ParamSymbol, int> params;
    std::map<Occurrence, int> occs;

    int occ_degree() const {
        int s = 0;
        for (const auto& [o, e] : occs) s += e;
        return s;
    }
};

namespace detail {

inline int compare_lattice_keys(const LatticeMonomial& a, const LatticeMonomial& b) {
    const int da = a.occ_degree();
    const int db = b.occ_degree();
    if (da != db) return da < db ? -1 : 1;
    if (int c = compare_exponent_maps(a.occs, b.occs); c != 0) return c;
    return compare_exponent_maps(a.params, b.params);
}

} // namespace detail

class LatticeExpr {
public:
    std::vector<LatticeMonomial> monomials;

    LatticeExpr() = default;
    explicit LatticeExpr(std::vector<LatticeMonomial> ms) : monomials(std::move(ms)) {}

    static LatticeExpr zero() { return {}; }

    static LatticeExpr constant(Rational c) {
        LatticeExpr e;
        if (c != 0) e.monomials.push_back(LatticeMonomial{std::move(c), {}, {}});
        return e;
    }

    static LatticeExpr constant(long num, long den = 1) {
        return constant(make_rational(num, den));
    }

    static LatticeExpr parameter(std::string name) {
        LatticeMonomial m{Rational(1), {}, {}};
        m.params[ParamSymbol{std::move(name)}] = 1;
        return LatticeExpr({std::move(m)});
    }

    static LatticeExpr occurrence(std::string species, std::vector<int> offset) {
        LatticeMonomial m{Rational(1), {}, {}};
        m.occs[Occurrence{std::move(species), std::move(offset)}] = 1;
        return LatticeExpr({std::move(m)});
    }

    bool empty() const { return monomials.empty(); }
};

inline LatticeExpr normalize(const LatticeExpr& e) {
    std::vector<LatticeMonomial> ms = e.monomials;
    for (auto& m : ms) {
        std::erase_if(m.params, [](const auto& kv) { return kv.second == 0; });
        std::erase_if(m.occs, [](const auto& kv) { return kv.second == 0; });
    }
    std::sort(ms.begin(), ms.end(), [](const LatticeMonomial& a, const LatticeMonomial& b) {
        return detail::compare_lattice_keys(a, b) < 0;
    });
    LatticeExpr out;
    out.monomials.reserve(ms.size());
    for (auto& m : ms) {
        if (!out.monomials.empty() && detail::compare_lattice_keys(out.monomials.back(), m) == 0) {
            out.monomials.back().coeff += m.coeff;
        } else {
            out.monomials.push_back(std::move(m));
        }
    }
    std::erase_if(out.monomials, [](const LatticeMonomial& m) { return m.coeff == 0; });
    return out;
}

inline LatticeExpr add(const LatticeExpr& a, const LatticeExpr& b) {
    LatticeExpr out;
    out.monomials.reserve(a.monomials.size() + b.monomials.size());
    out.monomials.insert(out.monomials.end(), a.monomials.begin(), a.monomials.end());
    out.monomials.insert(out.monomials.end(), b.monomials.begin(), b.monomials.end());
    return normalize(out);
}

inline LatticeExpr scale(const LatticeExpr& a, const Rational& c) {
    if (c == 0) return {};
    LatticeExpr out = a;
    for (auto& m : out.monomials) m.coeff *= c;
    return normalize(out);
}

inline LatticeExpr sub(const LatticeExpr& a, const LatticeExpr& b) {
    return add(a, scale(b, Rational(-1)));
}

inline LatticeExpr mul(const LatticeExpr& a, const LatticeExpr& b) {
    LatticeExpr out;
    out.monomials.reserve(a.monomials.size() * b.monomials.size());
    for (const auto& ma : a.monomials) {
        for (const auto& mb : b.monomials) {
            LatticeMonomial m;
            m.coeff = ma.coeff * mb.coeff;
            m.params = ma.params;
            for (const auto& [p, e] : mb.params) m.params[p] += e;
            m.occs = ma.occs;
            for (const auto& [o, e] : mb.occs) m.occs[o] += e;
            out.monomials.push_back(std::move(m));
        }
    }
    return normalize(out);
}

inline LatticeExpr operator+(const LatticeExpr& a, const LatticeExpr& b) { return add(a, b); }
inline LatticeExpr operator-(const LatticeExpr& a, const LatticeExpr& b) { return sub(a, b); }
inline LatticeExpr operator*(const LatticeExpr& a, const LatticeExpr& b) { return mul(a, b); }
inline LatticeExpr operator-(const LatticeExpr& a) { return scale(a, Rational(-1)); }

inline bool equal(const LatticeExpr& a, const LatticeExpr& b) {
    return normalize(sub(a, b)).empty();
}

// Translates every occurrence offset by v; a ring homomorphism.
inline LatticeExpr shift(const LatticeExpr& e, const std::vector<int>& v) {
    LatticeExpr out;
    out.monomials.reserve(e.monomials.size());
    for (const auto& m : e.monomials) {
        LatticeMonomial s;
        s.coeff = m.coeff;
        s.params = m.params;
        for (const auto& [occ, exp] : m.occs) {
            if (occ.offset.size() != v.size()) {
                throw std::invalid_argument("shift: offset arity mismatch");
            }
            Occurrence moved = occ;
            for (std::size_t i = 0; i < v.size(); ++i) moved.offset[i] += v[i];
            s.occs[moved] += exp;
        }
        out.monomials.push_back(std::move(s));
    }
    return normalize(out);
}

// Exact evaluation: occurrences and parameters drawn from the given maps.
inline Rational eval_lattice(const LatticeExpr& e,
                             const std::map<Occurrence, Rational>& occ_values,
                             const std::map<ParamSymbol, Rational>& param_values) {
    Rational total(0);
    for (const auto& m : e.monomials) {
        Rational v = m.coeff;
        for (const auto& [p, exp] : m.params) {
            const auto it = param_values.find(p);
            if (it == param_values.end()) throw MissingAssignmentError(p.name);
            v *= detail::rational_pow(it->second, exp);
        }
        for (const auto& [o, exp] : m.occs) {
            const auto it = occ_values.find(o);
            if (it == occ_values.end()) throw MissingAssignmentError(o.species);
            v *= detail::rational_pow(it->second, exp);
        }
        total += v;
    }
    return total;
}

// One hop channel: particles of `species` jump by `jump`; the rate is a
// lattice expression with offsets relative to the source site at 0.
struct Transition {
    std::string species;
    std::vector<int> jump;
    LatticeExpr rate;
};

struct Model {
    int dimension = 0;
    std::vector<VarId> variables;
    std::vector<std::string> species;
    std::vector<std::string> parameters;
    // Alias bodies fully expanded to species occurrences at offset 0.
    std::map<std::string, LatticeExpr> aliases;
    std::vector<Transition> transitions;
    // Content hash of the source file, empty for programmatic models.
    std::string fingerprint;

    bool has_species(const std::string& name) const {
        return std::find(species.begin(), species.end(), name) != species.end();
    }

    bool has_parameter(const std::string& name) const {
        return std::find(parameters.begin(), parameters.end(), name) != parameters.end();
    }
};

// Master-equation right-hand side for one species: for each of its
// transitions with jump v, the gain from the source site one jump behind
// minus the loss from the current site,
//     shift(rate * s_0, -v) - rate * s_0.
// The left-hand side c(t_{k+1}) - c(t_k) is implied and not represented.
inline LatticeExpr build_master_rhs(const Model& m, const std::string& species) {
    if (!m.has_species(species)) {
        throw std::invalid_argument("build_master_rhs: unknown species '" + species + "'");
    }
    LatticeExpr rhs;
    const LatticeExpr here =
        LatticeExpr::occurrence(species, std::vector<int>(static_cast<std::size_t>(m.dimension), 0));
    for (const auto& t : m.transitions) {
        if (t.species != species) continue;
        const LatticeExpr outflow = mul(t.rate, here);
        std::vector<int> back(t.jump.size());
        for (std::size_t i = 0; i < t.jump.size(); ++i) back[i] = -t.jump[i];
        rhs = add(rhs, sub(shift(outflow, back), outflow));
    }
    return rhs;
}

} // namespace mfderive
