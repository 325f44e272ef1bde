// Decomposition of differential polynomials into nested derivative terms
// plus a remainder, by repeated integration by parts on unspecified
// functions. The entry point is partial_integrate; flatten is its inverse.
#pragma once

#include "mfderive/symexpr.hpp"

#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mfderive {

// remainder + sum over parts of d/d(var) applied to the flattened inner
// decomposition. Each variable appears at most once per level, in the
// caller's variable order; nesting depth is bounded by the requested depth.
struct Decomposition {
    struct Part;

    ContinuumExpr remainder;
    std::vector<Part> parts;

    bool is_pure_remainder() const { return parts.empty(); }
    bool trivially_zero() const { return parts.empty() && remainder.empty(); }
};

struct Decomposition::Part {
    VarId var;
    Decomposition inner;
};

struct IntegrationOrder {
    std::vector<std::string> funcs; // elimination order of the unspecified functions
    std::vector<VarId> vars;        // integration variables, outermost first
    int depth = 2;                  // maximal nesting depth of derivative terms

    void validate() const {
        if (funcs.empty()) throw std::invalid_argument("integration order: no functions");
        if (vars.empty()) throw std::invalid_argument("integration order: no variables");
        if (depth < 1) throw std::invalid_argument("integration order: depth must be positive");
        std::set<std::string> fs(funcs.begin(), funcs.end());
        if (fs.size() != funcs.size()) {
            throw std::invalid_argument("integration order: duplicate function");
        }
        std::set<std::string> vs;
        for (const auto& v : vars) vs.insert(v.name);
        if (vs.size() != vars.size()) {
            throw std::invalid_argument("integration order: duplicate variable");
        }
    }
};

struct UnlistedFunctionError : std::runtime_error {
    std::string func;

    explicit UnlistedFunctionError(std::string f)
        : std::runtime_error("function '" + f + "' occurs in the expression but is not listed"),
          func(std::move(f)) {}
};

// Per-pivot loop counters, exposed for termination-bound checks.
struct IntegrateStats {
    struct PivotTrace {
        VarId var;
        std::string func;
        int order = 0;             // derivative order i of the pivot
        int sweep_count = 0;       // monomial batches moved by the quasi-linearity sweep
        int first_m = -1;          // m of the first linear iteration, -1 if none ran
        int linear_iterations = 0; // iterations of the elimination loop
    };

    std::vector<PivotTrace> pivots;
};

namespace detail {

inline DerivativeIndeterminate pure_derivative(const std::string& func, std::size_t dim,
                                               int var_index, int order) {
    DerivativeIndeterminate t{func, std::vector<int>(dim, 0)};
    if (order > 0) t.orders[static_cast<std::size_t>(var_index)] = order;
    return t;
}

inline ContinuumExpr indeterminate_power(const DerivativeIndeterminate& t, int exp) {
    ContinuumMonomial m{Rational(1), 0, {}, {}};
    m.dterms[t] = exp;
    return ContinuumExpr({std::move(m)});
}

inline std::size_t expression_dimension(const ContinuumExpr& e) {
    for (const auto& m : e.monomials) {
        if (!m.dterms.empty()) return m.dterms.begin()->first.orders.size();
    }
    return 0;
}

inline Decomposition partial_integrate_impl(ContinuumExpr E,
                                            std::span<const std::string> funcs,
                                            std::span<const VarId> vars, int depth,
                                            IntegrateStats* stats) {
    E = normalize(E);
    if (E.empty() || vars.empty() || depth == 0) {
        return Decomposition{std::move(E), {}};
    }
    const VarId& x = vars.front();
    const int n = highest_pure_order(E, x);
    if (n == 0) {
        return partial_integrate_impl(std::move(E), funcs, vars.subspan(1), depth, stats);
    }
    const std::size_t dim = expression_dimension(E);
    ContinuumExpr R;
    ContinuumExpr I;
    for (int i = n; i >= 1; --i) {
        for (const auto& func : funcs) {
            const DerivativeIndeterminate pivot = pure_derivative(func, dim, x.index, i);
            IntegrateStats::PivotTrace trace{x, func, i, 0, -1, 0};

            // Monomials where the pivot occurs nonlinearly cannot be
            // integrated with respect to it; they go to the remainder.
            for (int m = highest_exponent(E, pivot); m >= 2;
                 m = highest_exponent(E, pivot)) {
                const ContinuumExpr g = coefficient_of_power(E, pivot, m);
                const ContinuumExpr swept = mul(g, indeterminate_power(pivot, m));
                R = add(R, swept);
                E = sub(E, swept);
                ++trace.sweep_count;
            }

            // E is now linear in the pivot; integrate by parts until the
            // pivot is gone. Each step may create derivatives of order i+1
            // (for other functions), which are deliberately left alone.
            const DerivativeIndeterminate lower = pure_derivative(func, dim, x.index, i - 1);
            const ContinuumExpr lower_expr = indeterminate_power(lower, 1);
            const ContinuumExpr pivot_expr = indeterminate_power(pivot, 1);
            for (ContinuumExpr g = coefficient_of_power(E, pivot, 1); !g.empty();
                 g = coefficient_of_power(E, pivot, 1)) {
                const int m = highest_exponent(g, lower);
                if (trace.first_m < 0) trace.first_m = m;
                ++trace.linear_iterations;
                const Rational inv = make_rational(1, m + 1);
                I = add(I, scale(mul(lower_expr, g), inv));
                const ContinuumExpr dg = total_derivative(g, x);
                E = sub(E, scale(add(mul(pivot_expr, g), mul(lower_expr, dg)), inv));
            }
            if (stats && (trace.sweep_count > 0 || trace.linear_iterations > 0)) {
                stats->pivots.push_back(std::move(trace));
            }
        }
    }
    R = add(R, E);
    Decomposition inner = partial_integrate_impl(std::move(I), funcs, vars, depth - 1, stats);
    Decomposition rest = partial_integrate_impl(std::move(R), funcs, vars.subspan(1), depth, stats);
    if (inner.trivially_zero()) {
        return rest;
    }
    Decomposition out;
    out.remainder = std::move(rest.remainder);
    out.parts.reserve(rest.parts.size() + 1);
    out.parts.push_back(Decomposition::Part{x, std::move(inner)});
    for (auto& p : rest.parts) out.parts.push_back(std::move(p));
    return out;
}

} // namespace detail

inline Decomposition partial_integrate(const ContinuumExpr& e, const IntegrationOrder& ord,
                                       IntegrateStats* stats = nullptr) {
    ord.validate();
    const ContinuumExpr n = normalize(e);
    const std::set<std::string> listed(ord.funcs.begin(), ord.funcs.end());
    for (const auto& m : n.monomials) {
        for (const auto& [t, exp] : m.dterms) {
            if (!listed.count(t.func)) throw UnlistedFunctionError(t.func);
        }
    }
    return detail::partial_integrate_impl(n, std::span<const std::string>(ord.funcs),
                                          std::span<const VarId>(ord.vars), ord.depth, stats);
}

inline ContinuumExpr flatten(const Decomposition& dec) {
    ContinuumExpr total = dec.remainder;
    for (const auto& part : dec.parts) {
        total = add(total, total_derivative(flatten(part.inner), part.var));
    }
    return normalize(total);
}

inline bool structurally_equal(const Decomposition& a, const Decomposition& b) {
    if (!equal(a.remainder, b.remainder)) return false;
    if (a.parts.size() != b.parts.size()) return false;
    for (std::size_t i = 0; i < a.parts.size(); ++i) {
        if (a.parts[i].var != b.parts[i].var) return false;
        if (!structurally_equal(a.parts[i].inner, b.parts[i].inner)) return false;
    }
    return true;
}

inline int nesting_depth(const Decomposition& dec) {
    int best = 0;
    for (const auto& part : dec.parts) {
        best = std::max(best, 1 + nesting_depth(part.inner));
    }
    return best;
}

// Outcome of matching a right-hand side against the nonlinear diffusion
// form d/dt c = d/dv (D(c) d/dv c).
struct DiffusivityResult {
    std::optional<ContinuumExpr> diffusivity; // set iff the form matches
    ContinuumExpr residual;                   // rhs - d/dv(D d/dv c)

    bool in_form() const { return diffusivity.has_value(); }
};

inline DiffusivityResult extract_diffusivity(const ContinuumExpr& rhs, const std::string& c,
                                             const VarId& v) {
    const ContinuumExpr n = normalize(rhs);
    const std::size_t dim = detail::expression_dimension(n);
    if (dim == 0) {
        // No indeterminates at all: only the zero rhs is (vacuously) in form.
        if (n.empty()) return DiffusivityResult{ContinuumExpr::zero(), {}};
        return DiffusivityResult{std::nullopt, n};
    }
    const DerivativeIndeterminate second = detail::pure_derivative(c, dim, v.index, 2);
    const ContinuumExpr diffusivity = coefficient_of_power(n, second, 1);
    bool bare = true;
    for (const auto& m : diffusivity.monomials) {
        for (const auto& [t, exp] : m.dterms) {
            if (t.func != c || t.total_order() != 0) bare = false;
        }
    }
    const ContinuumExpr gradient =
        detail::indeterminate_power(detail::pure_derivative(c, dim, v.index, 1), 1);
    const ContinuumExpr candidate = total_derivative(mul(diffusivity, gradient), v);
    const ContinuumExpr residual = sub(n, candidate);
    if (bare && residual.empty()) {
        return DiffusivityResult{diffusivity, {}};
    }
    return DiffusivityResult{std::nullopt, residual};
}

} // namespace mfderive
