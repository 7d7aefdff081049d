#include <catch2/catch_amalgamated.hpp>

#include "baumbott/foliation.hpp"
#include "baumbott/rng.hpp"

using namespace baumbott;

namespace {

/// The separable quadratic benchmark field (x^2 - 2x, y^2 - 2y).
VectorField benchmark_field() {
    BiPoly P(2), Q(2);
    P.set_coeff(2, 0, cplx(1));
    P.set_coeff(1, 0, cplx(-2));
    Q.set_coeff(0, 2, cplx(1));
    Q.set_coeff(0, 1, cplx(-2));
    return VectorField(P, Q);
}

}  // namespace

TEST_CASE("benchmark field: finite singular points and indices") {
    const VectorField v = benchmark_field();
    const auto pts = finite_singular_points(v);
    REQUIRE(pts.size() == 4);

    const std::vector<std::pair<cplx, cplx>> loc{
        {cplx(0), cplx(0)}, {cplx(0), cplx(2)}, {cplx(2), cplx(0)}, {cplx(2), cplx(2)}};
    const std::vector<cplx> nu{cplx(2), cplx(-2), cplx(-2), cplx(2)};
    const std::vector<cplx> ratio{cplx(1), cplx(-1), cplx(-1), cplx(1)};
    for (size_t i = 0; i < 4; ++i) {
        CHECK(std::abs(pts[i].x - loc[i].first) < 1e-10);
        CHECK(std::abs(pts[i].y - loc[i].second) < 1e-10);
        REQUIRE(pts[i].nu.has_value());
        CHECK(std::abs(*pts[i].nu - nu[i]) < 1e-10);
        CHECK(std::abs(*pts[i].char_ratio - ratio[i]) < 1e-10);
        CHECK_FALSE(pts[i].degenerate);
    }
}

TEST_CASE("benchmark field: points on the line at infinity") {
    const VectorField v = benchmark_field();
    const auto pts = infinite_singular_points(v);
    REQUIRE(pts.size() == 3);

    // directions [1:0], [1:1] in chart 1; [0:1] handled in chart 2, last
    CHECK(pts[0].chart == 1);
    CHECK(std::abs(pts[0].vparam) < 1e-12);
    CHECK(std::abs(*pts[0].char_ratio - cplx(1)) < 1e-10);
    CHECK(std::abs(*pts[0].nu - cplx(2)) < 1e-10);
    CHECK(std::abs(pts[0].lambda - cplx(-1)) < 1e-10);
    CHECK(std::abs(pts[0].mu - cplx(-1)) < 1e-10);

    CHECK(pts[1].chart == 1);
    CHECK(std::abs(pts[1].vparam - cplx(1)) < 1e-12);
    CHECK(std::abs(*pts[1].char_ratio - cplx(-1)) < 1e-10);
    CHECK(std::abs(*pts[1].nu - cplx(-2)) < 1e-10);

    CHECK(pts[2].chart == 2);
    CHECK(std::abs(pts[2].vparam) < 1e-12);
    CHECK(std::abs(*pts[2].char_ratio - cplx(1)) < 1e-10);
    CHECK(std::abs(*pts[2].nu - cplx(2)) < 1e-10);
    CHECK(std::abs(pts[2].dir_x) < 1e-12);  // direction [0:1]
    CHECK(std::abs(pts[2].dir_y - cplx(1)) < 1e-12);

    SECTION("the two charts agree where they overlap") {
        const auto d2 = infinity_point_data(infinity_chart_field(v, 2), cplx(1));
        REQUIRE(d2.char_ratio.has_value());
        CHECK(std::abs(*d2.char_ratio - *pts[1].char_ratio) < 1e-12);
        CHECK(std::abs(*d2.nu - *pts[1].nu) < 1e-12);
    }
}

TEST_CASE("benchmark field: index identities hold to full precision") {
    const VectorField v = benchmark_field();
    CHECK(verify_baum_bott(v) < 1e-10);
    CHECK(verify_camacho_sad_infinity(v) < 1e-10);
    const SingSet s = singular_points(v);
    CHECK(s.N == 7);
    CHECK(s.infinite.size() == 3);
    CHECK(s.finite.size() == 4);
}

TEST_CASE("index sums for seeded random fields") {
    SECTION("quadratic: nu-sum 2, infinity ratio-sum 1, counts 3 + 4") {
        for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
            const VectorField v = random_field(seed, 2);
            CHECK(verify_baum_bott(v) < 1e-8);
            CHECK(verify_camacho_sad_infinity(v) < 1e-8);
            const SingSet s = singular_points(v);
            CHECK(s.infinite.size() == 3);
            CHECK(s.finite.size() == 4);
        }
    }
    SECTION("cubic: nu-sum -1, counts 4 + 9") {
        const VectorField v = random_field(101, 3);
        CHECK(std::abs(baum_bott_target(3) - cplx(-1)) < 1e-15);
        CHECK(verify_baum_bott(v) < 1e-7);
        const SingSet s = singular_points(v);
        CHECK(s.infinite.size() == 4);
        CHECK(s.finite.size() == 9);
    }
}

TEST_CASE("three invariant lines: per-line ratio sums equal 1") {
    const cplx a(1.0), b(2.0), c(-0.5);
    const VectorField v = three_line_field(a, b, c);

    const Line lx(cplx(1), cplx(0), cplx(0));        // x = 0
    const Line ly(cplx(0), cplx(1), cplx(0));        // y = 0
    const Line ld(cplx(1), cplx(1), cplx(-1));       // x + y = 1
    CHECK(is_line_invariant(v, lx));
    CHECK(is_line_invariant(v, ly));
    CHECK(is_line_invariant(v, ld));
    CHECK_FALSE(is_line_invariant(v, Line(cplx(1), cplx(2), cplx(3))));

    CHECK(verify_camacho_sad_line(v, lx) < 1e-10);
    CHECK(verify_camacho_sad_line(v, ly) < 1e-10);
    CHECK(verify_camacho_sad_line(v, ld) < 1e-10);
    CHECK(verify_camacho_sad_infinity(v) < 1e-10);
    CHECK(verify_baum_bott(v) < 1e-10);

    SECTION("eigenvalues at the base points match the parameters") {
        const auto pts = finite_singular_points(v);
        REQUIRE(pts.size() == 4);
        // sorted lex: (0,0), (0,1), (0.4,0.8), (1,0)
        auto has = [&](cplx x, cplx y, cplx l1, cplx l2) {
            for (const auto& p : pts)
                if (std::abs(p.x - x) + std::abs(p.y - y) < 1e-9) {
                    const double d1 = std::abs(p.lambda - l1) + std::abs(p.mu - l2);
                    const double d2 = std::abs(p.lambda - l2) + std::abs(p.mu - l1);
                    CHECK(std::min(d1, d2) < 1e-9);
                    return;
                }
            FAIL("expected singular point not found");
        };
        has(cplx(0), cplx(0), -b, a);
        has(cplx(1), cplx(0), b, -c);
        has(cplx(0), cplx(1), c, -a);
    }

    SECTION("ratios at infinity are the parameters over their sum") {
        const auto pts = infinite_singular_points(v);
        REQUIRE(pts.size() == 3);
        const cplx s = a + b + c;
        // sorted: v = -1 (line x+y=1), v = 0 (line y=0), then [0:1] (line x=0)
        CHECK(std::abs(*pts[0].char_ratio - c / s) < 1e-10);
        CHECK(std::abs(*pts[1].char_ratio - b / s) < 1e-10);
        CHECK(std::abs(*pts[2].char_ratio - a / s) < 1e-10);
    }

    SECTION("line through no singular direction is rejected") {
        CHECK_THROWS_AS(verify_camacho_sad_line(v, Line(cplx(1), cplx(2), cplx(3))), error);
    }
}

TEST_CASE("affine pushforward preserves the index data") {
    const VectorField v = benchmark_field();
    AffineMap T;
    T.A << cplx(1), cplx(2), cplx(-1), cplx(1);
    T.b << cplx(0.5), cplx(-0.25);
    const VectorField w = apply_affine(v, T);

    CHECK(verify_baum_bott(w) < 1e-9);
    CHECK(verify_camacho_sad_infinity(w) < 1e-9);

    // finite points map exactly; nu values match point-by-point
    const auto pv = finite_singular_points(v);
    const auto pw = finite_singular_points(w);
    REQUIRE(pw.size() == pv.size());
    for (const auto& p : pv) {
        const auto [tx, ty] = T.apply(p.x, p.y);
        bool matched = false;
        for (const auto& q : pw)
            if (std::abs(q.x - tx) + std::abs(q.y - ty) < 1e-8) {
                CHECK(std::abs(*q.nu - *p.nu) < 1e-9);
                matched = true;
                break;
            }
        CHECK(matched);
    }

    SECTION("round trip through the inverse map restores coefficients") {
        const VectorField u = apply_affine(w, T.inverse());
        const double scale = v.coeff_scale();
        for (int d = 0; d <= 2; ++d)
            for (int j = 0; j <= d; ++j) {
                CHECK(std::abs(u.P().coeff(d - j, j) - v.P().coeff(d - j, j)) < 1e-12 * scale);
                CHECK(std::abs(u.Q().coeff(d - j, j) - v.Q().coeff(d - j, j)) < 1e-12 * scale);
            }
    }
}

TEST_CASE("degenerate inputs are reported as such") {
    SECTION("radial top part has no invariant infinity line") {
        BiPoly P(1), Q(1);
        P.set_coeff(1, 0, cplx(1));  // x
        Q.set_coeff(0, 1, cplx(1));  // y
        const VectorField v(P, Q);
        CHECK(is_dicritical(v));
        CHECK_THROWS_AS(infinity_chart_field(v), error);
    }
    SECTION("common factor") {
        BiPoly P(2), Q(2);
        P.set_coeff(1, 1, cplx(1));  // xy
        Q.set_coeff(2, 0, cplx(1));  // x^2
        const VectorField v(P, Q);
        CHECK_THROWS_AS(finite_singular_points(v), error);
    }
    SECTION("nilpotent-linearization point blocks the index sum") {
        BiPoly P(2), Q(2);
        P.set_coeff(2, 0, cplx(1));  // x^2
        Q.set_coeff(0, 2, cplx(1));  // y^2
        const VectorField v(P, Q);
        const auto pts = finite_singular_points(v);
        REQUIRE(pts.size() == 1);
        CHECK(pts[0].degenerate);
        CHECK_FALSE(pts[0].nu.has_value());
        CHECK_THROWS_AS(verify_baum_bott(v), error);
    }
}

TEST_CASE("integrating-factor construction annihilates its first integral") {
    // f = xy + x + y, g = x - y/2, alpha = 2: dyadic data, so the residual
    // polynomial is computed without rounding and must vanish exactly
    BiPoly f(2), g(1);
    f.set_coeff(1, 1, cplx(1));
    f.set_coeff(1, 0, cplx(1));
    f.set_coeff(0, 1, cplx(1));
    g.set_coeff(1, 0, cplx(1));
    g.set_coeff(0, 1, cplx(-0.5));
    const cplx alpha(2);

    const VectorField v = darboux_two_factor(f, g, alpha);
    CHECK(v.degree() == 2);
    CHECK(darboux_annihilation_residual(f, g, alpha, v) == 0.0);

    // the line g = 0 is invariant, and f = g = 0 points are singular
    CHECK(is_line_invariant(v, Line(g.coeff(1, 0), g.coeff(0, 1), g.coeff(0, 0))));
    for (const auto& [x0, y0] :
         std::vector<std::pair<cplx, cplx>>{{cplx(0), cplx(0)}, {cplx(-1.5), cplx(-3)}}) {
        CHECK(std::abs(v.P().eval(x0, y0)) < 1e-12);
        CHECK(std::abs(v.Q().eval(x0, y0)) < 1e-12);
    }

    SECTION("degree guards") {
        BiPoly big(3);
        big.set_coeff(3, 0, cplx(1));
        CHECK_THROWS_AS(darboux_two_factor(big, g, alpha), error);
        CHECK_THROWS_AS(darboux_two_factor(f, f, alpha), error);
    }
}
