// Formal Taylor expansion of lattice expressions into h-graded differential
// polynomials, and the scaling limit that turns the expanded master-equation
// right-hand side into a PDE right-hand side.
#pragma once

#include "mfderive/lattice.hpp"
#include "mfderive/symexpr.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfderive {

struct ExpansionOptions {
    int order = 2;   // spatial Taylor order K
    int scaling = 1; // s, with dt = h^s: 1 hyperbolic, 2 parabolic
    int keep = 2;    // powers of h retained after dividing by h^s

    void validate() const {
        if (order < 1) throw std::invalid_argument("expansion order must be positive");
        if (scaling < 1) throw std::invalid_argument("scaling exponent must be positive");
        if (keep < 0) throw std::invalid_argument("keep must be nonnegative");
        if (order < scaling) {
            throw std::invalid_argument("expansion order must be at least the scaling exponent");
        }
        if (keep > order - scaling + 1) {
            throw std::invalid_argument(
                "keep exceeds the orders resolved by the expansion (keep <= order - scaling + 1)");
        }
    }
};

// Raised when the expanded right-hand side has a nonzero coefficient below
// h^s: the requested scaling limit does not exist for the model.
struct ScalingObstruction : std::runtime_error {
    int power;
    ContinuumExpr coefficient;
    std::string species; // filled in by the derivation pipeline

    ScalingObstruction(int p, ContinuumExpr coeff, std::string sp = {})
        : std::runtime_error("nonzero coefficient at h^" + std::to_string(p) +
                             (sp.empty() ? std::string() : " for species '" + sp + "'") +
                             "; the requested scaling limit does not exist"),
          power(p), coefficient(std::move(coeff)), species(std::move(sp)) {}
};

// Taylor polynomial of one occurrence about the current site:
//   sum over multi-indices |m| <= K of h^|m| * prod_v offset_v^{m_v}/m_v! * d^m c.
inline ContinuumExpr taylor_occurrence(const Occurrence& o, int order) {
    if (order < 0) throw std::invalid_argument("taylor_occurrence: negative order");
    const std::size_t dim = o.offset.size();
    ContinuumExpr out;
    std::vector<int> multi(dim, 0);
    // Depth-first enumeration of multi-indices with total order <= `order`.
    auto emit = [&](const std::vector<int>& m, int total) {
        Rational c(1);
        for (std::size_t v = 0; v < dim; ++v) {
            if (m[v] == 0) continue;
            if (o.offset[v] == 0) return; // 0^positive
            Rational factor(1);
            for (int i = 0; i < m[v]; ++i) {
                factor *= Rational(o.offset[v]);
                factor /= Rational(i + 1);
            }
            c *= factor;
        }
        ContinuumMonomial mono{std::move(c), total, {}, {}};
        mono.dterms[DerivativeIndeterminate{o.species, m}] = 1;
        out.monomials.push_back(std::move(mono));
    };
    auto recurse = [&](auto&& self, std::size_t v, int used) -> void {
        if (v == dim) {
            emit(multi, used);
            return;
        }
        for (int k = 0; used + k <= order; ++k) {
            multi[v] = k;
            self(self, v + 1, used + k);
        }
        multi[v] = 0;
    };
    recurse(recurse, 0, 0);
    return normalize(out);
}

// Expands every occurrence to its Taylor polynomial of order K and reduces
// mod h^{K+1}. The reduction is interleaved bottom-up: each product step
// discards h powers beyond K before multiplying further, so the large
// untruncated intermediate is never formed.
inline ContinuumExpr expand_lattice(const LatticeExpr& e, int order) {
    const int h_bound = order + 1;
    std::map<Occurrence, ContinuumExpr> cache;
    auto expansion_of = [&](const Occurrence& o) -> const ContinuumExpr& {
        auto it = cache.find(o);
        if (it == cache.end()) it = cache.emplace(o, taylor_occurrence(o, order)).first;
        return it->second;
    };
    ContinuumExpr total;
    for (const auto& m : e.monomials) {
        ContinuumMonomial seed{m.coeff, 0, m.params, {}};
        ContinuumExpr acc({seed});
        for (const auto& [occ, exp] : m.occs) {
            for (int i = 0; i < exp; ++i) {
                acc = mul(acc, expansion_of(occ), h_bound);
            }
        }
        total = add(total, acc);
    }
    return total;
}

// Divides the h-graded expression by h^s and truncates to the first `keep`
// h powers; the result is the PDE right-hand side. A nonzero coefficient
// below h^s raises ScalingObstruction instead of being dropped.
inline ContinuumExpr take_limit(const ContinuumExpr& e, const ExpansionOptions& opts) {
    opts.validate();
    const ContinuumExpr n = normalize(e);
    for (int p = 0; p < opts.scaling; ++p) {
        ContinuumExpr coeff = h_coefficient(n, p);
        if (!coeff.empty()) {
            throw ScalingObstruction(p, std::move(coeff));
        }
    }
    return reduce_mod_h(divide_h_power(n, opts.scaling), opts.keep);
}

} // namespace mfderive
