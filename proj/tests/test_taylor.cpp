#include "support/builders.hpp"
#include "support/poly_oracle.hpp"
#include "support/random_gen.hpp"

#include <doctest.h>

using namespace mfderive;
using testsup::Poly;
using testsup::Rng;

namespace {

ContinuumExpr term(Rational coeff, int h, const char* func, std::vector<int> orders) {
    return scale(mul(ContinuumExpr::grid_h(h), ContinuumExpr::derivative(func, std::move(orders))),
                 coeff);
}

// Lattice-side value of e when species follow explicit polynomials: the
// occurrence (s, a) reads p_s at the point displaced by a*h.
Rational lattice_value(const LatticeExpr& e, const std::map<std::string, Poly>& funcs,
                       const std::vector<Rational>& at, const Rational& h,
                       const std::map<ParamSymbol, Rational>& params) {
    std::map<Occurrence, Rational> occ_values;
    for (const auto& m : e.monomials) {
        for (const auto& [o, exp] : m.occs) {
            if (occ_values.count(o)) continue;
            std::vector<Rational> point(at);
            for (std::size_t i = 0; i < point.size(); ++i) {
                point[i] += Rational(o.offset[i]) * h;
            }
            occ_values[o] = funcs.at(o.species).eval(point);
        }
    }
    return eval_lattice(e, occ_values, params);
}

// Random polynomial of total degree <= deg in `dim` variables.
Poly random_poly(Rng& rng, int dim, int deg) {
    Poly p = Poly::constant(dim, rng.rational(4, 3));
    if (deg >= 1) {
        for (int v = 0; v < dim; ++v) {
            p = p + Poly::variable(dim, v).scaled(rng.rational(4, 3));
        }
    }
    if (deg >= 2) {
        for (int v = 0; v < dim; ++v) {
            for (int w = v; w < dim; ++w) {
                p = p + (Poly::variable(dim, v) * Poly::variable(dim, w)).scaled(rng.rational(3, 2));
            }
        }
    }
    return p;
}

// Lattice expression whose monomials respect the degree budget
// sum(exponent * deg(p_species)) <= K, so the order-K expansion is exact.
LatticeExpr random_budgeted_lattice(Rng& rng, int dim, const std::map<std::string, int>& degrees,
                                    int budget) {
    std::vector<std::string> species;
    for (const auto& [s, d] : degrees) species.push_back(s);
    LatticeExpr e;
    const int n = rng.uniform(1, 4);
    for (int i = 0; i < n; ++i) {
        LatticeMonomial m;
        m.coeff = rng.rational();
        if (rng.chance(0.3)) m.params[ParamSymbol{"alpha"}] = 1;
        int left = budget;
        const int tries = rng.uniform(0, 3);
        for (int t = 0; t < tries; ++t) {
            const std::string s = species[static_cast<std::size_t>(
                rng.uniform(0, static_cast<int>(species.size()) - 1))];
            if (degrees.at(s) > left) continue;
            std::vector<int> offset(static_cast<std::size_t>(dim), 0);
            for (auto& o : offset) o = rng.uniform(-2, 2);
            m.occs[Occurrence{s, std::move(offset)}] += 1;
            left -= degrees.at(s);
        }
        e.monomials.push_back(std::move(m));
    }
    return e;
}

} // namespace

TEST_CASE("taylor_occurrence matches the displayed expansions") {
    // r at (1,0), K=2: r + h dx(r) + 1/2 h^2 dx^2(r)
    ContinuumExpr expected = add(ContinuumExpr::function("r", 2),
                                 add(term(Rational(1), 1, "r", {1, 0}),
                                     term(make_rational(1, 2), 2, "r", {2, 0})));
    CHECK(equal(taylor_occurrence(Occurrence{"r", {1, 0}}, 2), expected));

    // b at (0,1), K=1: b + h dy(b)
    expected = add(ContinuumExpr::function("b", 2), term(Rational(1), 1, "b", {0, 1}));
    CHECK(equal(taylor_occurrence(Occurrence{"b", {0, 1}}, 1), expected));

    // zero offset: the bare function at any order
    for (int k : {0, 1, 2, 5}) {
        CHECK(equal(taylor_occurrence(Occurrence{"r", {0, 0}}, k),
                    ContinuumExpr::function("r", 2)));
    }

    // double step at (2,0), K=2: r + 2 h dx(r) + 2 h^2 dx^2(r)
    expected = add(ContinuumExpr::function("r", 2),
                   add(term(Rational(2), 1, "r", {1, 0}), term(Rational(2), 2, "r", {2, 0})));
    const ContinuumExpr got = taylor_occurrence(Occurrence{"r", {2, 0}}, 2);
    CHECK(equal(got, expected));

    // cross-check numerically against a degree-2 polynomial jet
    Rng rng(7401);
    for (int i = 0; i < 20; ++i) {
        std::map<std::string, Poly> funcs;
        funcs["r"] = random_poly(rng, 2, 2);
        const std::vector<Rational> at = {rng.rational(), rng.rational()};
        const Rational h = rng.rational(2, 3);
        const JetPoint jet = testsup::jet_from_polys(funcs, at, 2, h);
        const std::vector<Rational> moved = {at[0] + 2 * h, at[1]};
        CHECK(eval_at_jet(got, jet) == funcs["r"].eval(moved));
    }
}

TEST_CASE("expand_lattice expands, truncates bottom-up and keeps gradings") {
    CHECK(equal(expand_lattice(LatticeExpr::occurrence("r", {0, 0}), 3),
                ContinuumExpr::function("r", 2)));

    // r(-1,0) - r(0,0) at K=2: -h dx(r) + 1/2 h^2 dx^2(r)
    const LatticeExpr hop =
        sub(LatticeExpr::occurrence("r", {-1, 0}), LatticeExpr::occurrence("r", {0, 0}));
    const ContinuumExpr expected =
        add(term(Rational(-1), 1, "r", {1, 0}), term(make_rational(1, 2), 2, "r", {2, 0}));
    CHECK(equal(expand_lattice(hop, 2), expected));
}

TEST_CASE("expansion invariants: truncation consistency and multiplicativity") {
    Rng rng(7402);
    testsup::LatticeProfile prof;
    prof.max_monomials = 3;
    prof.max_degree = 2;
    for (int i = 0; i < 40; ++i) {
        const LatticeExpr a = testsup::random_lattice_expr(rng, prof);
        const LatticeExpr b = testsup::random_lattice_expr(rng, prof);
        const int K = rng.uniform(1, 3);
        CHECK(equal(reduce_mod_h(expand_lattice(a, K + 1), K + 1), expand_lattice(a, K)));
        CHECK(equal(expand_lattice(mul(a, b), K),
                    reduce_mod_h(mul(expand_lattice(a, K), expand_lattice(b, K)), K + 1)));
    }
}

TEST_CASE("expansion agrees exactly with lattice evaluation on polynomial jets") {
    Rng rng(7403);
    int checked = 0;
    for (int i = 0; i < 120; ++i) {
        const int dim = rng.uniform(1, 2);
        const int K = rng.uniform(1, 3);
        std::map<std::string, int> degrees;
        degrees["r"] = rng.uniform(0, std::min(2, K));
        degrees["b"] = rng.uniform(0, std::min(2, K));
        std::map<std::string, Poly> funcs;
        for (const auto& [s, d] : degrees) funcs[s] = random_poly(rng, dim, d);
        const LatticeExpr e = random_budgeted_lattice(rng, dim, degrees, K);

        std::vector<Rational> at;
        for (int v = 0; v < dim; ++v) at.push_back(rng.rational());
        const Rational h = rng.rational(2, 3);
        std::map<ParamSymbol, Rational> params;
        params[ParamSymbol{"alpha"}] = rng.rational();

        const JetPoint jet = testsup::jet_from_polys(funcs, at, K, h, params);
        const Rational via_lattice = lattice_value(e, funcs, at, h, params);
        const Rational via_expansion = eval_at_jet(expand_lattice(e, K), jet);
        CHECK(via_lattice == via_expansion);
        ++checked;
    }
    CHECK(checked >= 100);
}

TEST_CASE("expansion commutes with shifting on polynomial jets") {
    Rng rng(7404);
    for (int i = 0; i < 40; ++i) {
        const int dim = rng.uniform(1, 2);
        const int K = 2;
        std::map<std::string, int> degrees = {{"r", 1}, {"b", rng.uniform(0, 1)}};
        std::map<std::string, Poly> funcs;
        for (const auto& [s, d] : degrees) funcs[s] = random_poly(rng, dim, d);
        const LatticeExpr e = random_budgeted_lattice(rng, dim, degrees, K);
        std::vector<int> v(static_cast<std::size_t>(dim));
        for (auto& c : v) c = rng.uniform(-2, 2);

        std::vector<Rational> at;
        for (int k = 0; k < dim; ++k) at.push_back(rng.rational());
        const Rational h = rng.rational(2, 3);
        std::map<ParamSymbol, Rational> params;
        params[ParamSymbol{"alpha"}] = rng.rational();

        std::vector<Rational> recentred(at);
        for (std::size_t k = 0; k < recentred.size(); ++k) recentred[k] += Rational(v[k]) * h;

        const Rational lhs = eval_at_jet(expand_lattice(shift(e, v), K),
                                         testsup::jet_from_polys(funcs, at, K, h, params));
        const Rational rhs = eval_at_jet(expand_lattice(e, K),
                                         testsup::jet_from_polys(funcs, recentred, K, h, params));
        CHECK(lhs == rhs);
    }
}

TEST_CASE("take_limit shifts the grading and truncates") {
    const ContinuumExpr e = term(Rational(1), 2, "f", {2});
    ExpansionOptions opts;
    opts.order = 2;
    opts.scaling = 1;
    opts.keep = 2;
    CHECK(equal(take_limit(e, opts), term(Rational(1), 1, "f", {2})));
}

TEST_CASE("take_limit raises ScalingObstruction with the offending coefficient") {
    const ContinuumExpr c = ContinuumExpr::function("c", 1);
    const ContinuumExpr e = add(c, term(Rational(1), 1, "c", {1}));
    ExpansionOptions opts;
    opts.order = 1;
    opts.scaling = 1;
    opts.keep = 1;
    try {
        take_limit(e, opts);
        FAIL("expected ScalingObstruction");
    } catch (const ScalingObstruction& ob) {
        CHECK(ob.power == 0);
        CHECK(equal(ob.coefficient, c));
    }
}

TEST_CASE("expansion options are validated") {
    ExpansionOptions opts;
    opts.order = 1;
    opts.scaling = 2;
    opts.keep = 0;
    CHECK_THROWS_AS(opts.validate(), std::invalid_argument);
    opts.order = 2;
    opts.scaling = 2;
    opts.keep = 2; // keep > order - scaling + 1
    CHECK_THROWS_AS(opts.validate(), std::invalid_argument);
    opts.keep = 1;
    CHECK_NOTHROW(opts.validate());
}

TEST_CASE("interleaved truncation matches the expand-everything-then-reduce route") {
    const Model ped = load_model(testsup::fixture_path("models/pedestrian.json"));
    const LatticeExpr master = build_master_rhs(ped, "r");

    // Same pipeline stage without bottom-up truncation: expand every
    // occurrence fully, multiply, divide by h, then reduce.
    ContinuumExpr untruncated;
    for (const auto& m : master.monomials) {
        ContinuumMonomial seed{m.coeff, 0, m.params, {}};
        ContinuumExpr acc({seed});
        for (const auto& [occ, exp] : m.occs) {
            for (int i = 0; i < exp; ++i) acc = mul(acc, taylor_occurrence(occ, 2));
        }
        untruncated = add(untruncated, acc);
    }
    const ContinuumExpr reduced = reduce_mod_h(divide_h_power(untruncated, 1), 2);
    const ContinuumExpr via_pipeline =
        take_limit(expand_lattice(master, 2), ExpansionOptions{});
    CHECK(equal(reduced, via_pipeline));
    CHECK(reduced.monomials.size() == 62);
    CHECK(untruncated.monomials.size() > reduced.monomials.size());
}

TEST_CASE("master equations of hopping models lose their h^0 coefficient") {
    Rng rng(7405);
    for (int i = 0; i < 20; ++i) {
        const Model m = testsup::random_conserving_model(rng);
        for (const auto& s : m.species) {
            const ContinuumExpr expanded = expand_lattice(build_master_rhs(m, s), 2);
            CHECK(h_coefficient(expanded, 0).empty());
            ExpansionOptions opts; // s = 1
            CHECK_NOTHROW(take_limit(expanded, opts));
        }
    }
}

TEST_CASE("the adhesion expansion also loses its h^1 coefficient") {
    const Model adh = load_model(testsup::fixture_path("models/adhesion.json"));
    const ContinuumExpr expanded = expand_lattice(build_master_rhs(adh, "c"), 2);
    CHECK(h_coefficient(expanded, 0).empty());
    CHECK(h_coefficient(expanded, 1).empty());
    ExpansionOptions opts;
    opts.order = 2;
    opts.scaling = 2;
    opts.keep = 1;
    const ContinuumExpr rhs = take_limit(expanded, opts);
    CHECK_FALSE(rhs.empty());
}
