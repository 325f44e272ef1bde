#include "support/builders.hpp"
#include "support/random_gen.hpp"

#include <doctest.h>

using namespace mfderive;
using testsup::ExprProfile;
using testsup::Rng;

namespace {

const VarId X{"x", 0};
const VarId Y{"y", 1};

// 1-D builders over x
ContinuumExpr f1(int order = 0) { return ContinuumExpr::derivative("f", {order}); }
ContinuumExpr g1(int order = 0) { return ContinuumExpr::derivative("g", {order}); }

IntegrationOrder ord_fx(int depth = 1) { return IntegrationOrder{{"f"}, {VarId{"x", 0}}, depth}; }
IntegrationOrder ord_fgx(int depth = 1) {
    return IntegrationOrder{{"f", "g"}, {VarId{"x", 0}}, depth};
}

Decomposition pure(const ContinuumExpr& remainder) { return Decomposition{remainder, {}}; }

Decomposition with_part(const VarId& v, Decomposition inner, ContinuumExpr remainder = {}) {
    Decomposition dec;
    dec.remainder = std::move(remainder);
    dec.parts.push_back(Decomposition::Part{v, std::move(inner)});
    return dec;
}

} // namespace

TEST_CASE("a perfect derivative decomposes with zero remainder") {
    // f dx(f) = dx(1/2 f^2)
    const ContinuumExpr e = mul(f1(), f1(1));
    const Decomposition dec = partial_integrate(e, ord_fx());
    const Decomposition expected =
        with_part(VarId{"x", 0}, pure(scale(mul(f1(), f1()), make_rational(1, 2))));
    CHECK(structurally_equal(dec, expected));
    CHECK(equal(flatten(dec), e));
}

TEST_CASE("non-integrable content survives as the remainder") {
    // f dx(f) + f = dx(1/2 f^2) + f
    const ContinuumExpr e = add(mul(f1(), f1(1)), f1());
    const Decomposition dec = partial_integrate(e, ord_fx());
    const Decomposition expected = with_part(
        VarId{"x", 0}, pure(scale(mul(f1(), f1()), make_rational(1, 2))), f1());
    CHECK(structurally_equal(dec, expected));
    CHECK(equal(flatten(dec), e));
}

TEST_CASE("two functions: the function order picks the representative") {
    // dx(f) dx(g) = dx(f dx(g)) - f dx^2(g) under funcs order (f, g)
    const ContinuumExpr e = mul(f1(1), g1(1));
    const Decomposition dec = partial_integrate(e, ord_fgx());
    const Decomposition expected =
        with_part(VarId{"x", 0}, pure(mul(f1(), g1(1))),
                  scale(mul(f1(), g1(2)), Rational(-1)));
    CHECK(structurally_equal(dec, expected));
    CHECK(equal(flatten(dec), e));
}

TEST_CASE("second-order input integrates to the displayed antiderivative") {
    // f^2 dx^2(g) - 2 dx(f)^2 g - 2 f dx^2(f) g = dx(f^2 dx(g) - 2 f dx(f) g)
    const ContinuumExpr e =
        sub(sub(mul(mul(f1(), f1()), g1(2)), scale(mul(mul(f1(1), f1(1)), g1()), Rational(2))),
            scale(mul(mul(f1(), f1(2)), g1()), Rational(2)));
    const Decomposition dec = partial_integrate(e, ord_fgx());
    const ContinuumExpr antiderivative =
        sub(mul(mul(f1(), f1()), g1(1)), scale(mul(mul(f1(), f1(1)), g1()), Rational(2)));
    CHECK(structurally_equal(dec, with_part(VarId{"x", 0}, pure(antiderivative))));
    CHECK(equal(flatten(dec), e));
}

TEST_CASE("multivariate input splits across variable passes") {
    // dx(f) dy(f) + dx(f) + dy(f)
    //   = dx(f dy(f) + f) + dy(f) - f dx(dy(f))   with funcs (f), vars (x, y)
    const ContinuumExpr dxf = ContinuumExpr::derivative("f", {1, 0});
    const ContinuumExpr dyf = ContinuumExpr::derivative("f", {0, 1});
    const ContinuumExpr f = ContinuumExpr::function("f", 2);
    const ContinuumExpr e = add(mul(dxf, dyf), add(dxf, dyf));
    const IntegrationOrder ord{{"f"}, {X, Y}, 1};
    const Decomposition dec = partial_integrate(e, ord);

    Decomposition expected = with_part(X, pure(add(mul(f, dyf), f)));
    expected.parts.push_back(Decomposition::Part{Y, pure(f)});
    expected.remainder = scale(mul(f, ContinuumExpr::derivative("f", {1, 1})), Rational(-1));
    CHECK(structurally_equal(dec, expected));
    CHECK(equal(flatten(dec), e));
}

TEST_CASE("nonlinear pivots go straight to the remainder") {
    // dx(f)^2 is quasi-linear in nothing: untouched
    const ContinuumExpr e = mul(f1(1), f1(1));
    const Decomposition dec = partial_integrate(e, ord_fx());
    CHECK(dec.is_pure_remainder());
    CHECK(equal(dec.remainder, e));
}

TEST_CASE("flatten inverts the decomposition structure") {
    const ContinuumExpr r = mul(f1(), g1(2));
    CHECK(equal(flatten(pure(r)), r));

    const Decomposition half_sq =
        with_part(VarId{"x", 0}, pure(scale(mul(f1(), f1()), make_rational(1, 2))));
    CHECK(equal(flatten(half_sq), mul(f1(), f1(1))));
}

TEST_CASE("soundness: flatten(partial_integrate(E)) == E on random inputs") {
    Rng rng(7501);
    ExprProfile prof;
    prof.dim = 2;
    prof.funcs = {"f", "g", "u"};
    prof.params = {"alpha"};
    prof.max_order = 3;
    prof.max_degree = 3;
    prof.max_monomials = 5;
    int trials = 0;
    for (int i = 0; i < 200; ++i) {
        const ContinuumExpr e = normalize(testsup::random_expr(rng, prof));
        IntegrationOrder ord{{"f", "g", "u"}, {X, Y}, rng.uniform(1, 3)};
        const Decomposition dec = partial_integrate(e, ord);
        CHECK(equal(flatten(dec), e));
        CHECK(nesting_depth(dec) <= ord.depth);
        // cross-check with formal jets
        for (int j = 0; j < 5; ++j) {
            const ContinuumExpr flat = flatten(dec);
            const JetPoint jet = testsup::random_jet_covering(rng, {e, flat});
            CHECK(eval_at_jet(flat, jet) == eval_at_jet(e, jet));
        }
        ++trials;
    }
    CHECK(trials == 200);
}

TEST_CASE("the elimination loop terminates within its pivot bound") {
    Rng rng(7502);
    ExprProfile prof;
    prof.dim = 2;
    prof.max_monomials = 5;
    for (int i = 0; i < 80; ++i) {
        const ContinuumExpr e = normalize(testsup::random_expr(rng, prof));
        IntegrationOrder ord{{"f", "g", "u"}, {X, Y}, 2};
        IntegrateStats stats;
        partial_integrate(e, ord, &stats);
        for (const auto& pivot : stats.pivots) {
            if (pivot.linear_iterations > 0) {
                CHECK(pivot.linear_iterations <= pivot.first_m + 1);
            }
        }
    }
}

TEST_CASE("single-variable remainders are fixed points") {
    Rng rng(7503);
    ExprProfile prof;
    prof.dim = 1;
    prof.funcs = {"f", "g"};
    prof.max_order = 3;
    prof.max_degree = 3;
    prof.max_monomials = 5;
    const IntegrationOrder ord{{"f", "g"}, {VarId{"x", 0}}, 1};
    for (int i = 0; i < 120; ++i) {
        const ContinuumExpr e = normalize(testsup::random_expr(rng, prof));
        const Decomposition dec = partial_integrate(e, ord);
        const Decomposition again = partial_integrate(dec.remainder, ord);
        CHECK(again.is_pure_remainder());
        CHECK(equal(again.remainder, dec.remainder));
    }
}

TEST_CASE("every requested depth flattens back to the input") {
    Rng rng(7504);
    ExprProfile prof;
    prof.dim = 2;
    prof.max_monomials = 4;
    for (int i = 0; i < 30; ++i) {
        const ContinuumExpr e = normalize(testsup::random_expr(rng, prof));
        for (int d = 1; d <= 3; ++d) {
            IntegrationOrder ord{{"f", "g", "u"}, {X, Y}, d};
            CHECK(equal(flatten(partial_integrate(e, ord)), e));
        }
    }
}

TEST_CASE("identical inputs produce bit-identical serialized output") {
    Rng rng(7505);
    ExprProfile prof;
    prof.dim = 2;
    for (int i = 0; i < 20; ++i) {
        const ContinuumExpr e = normalize(testsup::random_expr(rng, prof));
        IntegrationOrder ord{{"f", "g", "u"}, {X, Y}, 2};
        const std::string a = render_sexp(partial_integrate(e, ord), {"x", "y"});
        const std::string b = render_sexp(partial_integrate(e, ord), {"x", "y"});
        CHECK(a == b);
    }
}

TEST_CASE("functions not covered by the integration order are rejected") {
    const ContinuumExpr e = mul(f1(), g1(1));
    try {
        partial_integrate(e, ord_fx());
        FAIL("expected UnlistedFunctionError");
    } catch (const UnlistedFunctionError& err) {
        CHECK(err.func == "g");
    }
}

TEST_CASE("extract_diffusivity recognizes the diffusion form") {
    const VarId x{"x", 0};
    const ContinuumExpr c = ContinuumExpr::function("c", 1);
    const ContinuumExpr cx = ContinuumExpr::derivative("c", {1});
    const ContinuumExpr cxx = ContinuumExpr::derivative("c", {2});

    // plain diffusion: D = 1
    const DiffusivityResult lin = extract_diffusivity(cxx, "c", x);
    REQUIRE(lin.in_form());
    CHECK(equal(*lin.diffusivity, ContinuumExpr::constant(1)));

    // advection: no second derivative, not in form
    const DiffusivityResult adv = extract_diffusivity(mul(c, cx), "c", x);
    CHECK_FALSE(adv.in_form());
    CHECK(equal(adv.residual, mul(c, cx)));

    // D(c) dx^2 c + D'(c) (dx c)^2 for D = 1 - 4 alpha c + 3 alpha c^2
    const ContinuumExpr D = testsup::adhesion_diffusivity_poly_form();
    const ContinuumExpr rhs = total_derivative(mul(D, cx), x);
    const DiffusivityResult res = extract_diffusivity(rhs, "c", x);
    REQUIRE(res.in_form());
    CHECK(equal(*res.diffusivity, D));
    CHECK(equal(*res.diffusivity, testsup::adhesion_diffusivity_vertex_form()));

    // a rhs whose second-derivative coefficient involves dx(c) is rejected
    const ContinuumExpr bad = mul(cx, cxx);
    CHECK_FALSE(extract_diffusivity(bad, "c", x).in_form());

    CHECK(extract_diffusivity(ContinuumExpr::zero(), "c", x).in_form());
}
