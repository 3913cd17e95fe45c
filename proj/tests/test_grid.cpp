#include <doctest.h>

#include <cmath>

#include "hrt/geometry.hpp"
#include "hrt/grid.hpp"

using namespace hrt;

TEST_CASE("rescale maps requests to the unit square") {
    RegularGrid2 g;
    g.n1 = 5;
    g.d1 = 1.0;
    g.n2 = 3;
    g.d2 = 1.0;
    CmpGather f(g);
    auto [u, rec] = rescale_to_unit(f);
    CHECK(rec.T == 4.0);
    CHECK(rec.X == 2.0);
    CHECK(rec.tau_to_unit(2.0) == doctest::Approx(0.5));
    CHECK(rec.q_to_unit(0.5) == doctest::Approx(0.25));
    CHECK(rec.output_factor() == 2.0);
    CHECK(u.grid.end1() == doctest::Approx(1.0));
    CHECK(u.grid.end2() == doctest::Approx(1.0));
    CHECK(u.grid.o1 == 0.0);
}

TEST_CASE("unit gather gives the identity record") {
    CmpGather f(unit_grid(11, 7));
    auto [u, rec] = rescale_to_unit(f);
    CHECK(rec.T == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(rec.X == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(rec.tau_to_unit(0.3) == doctest::Approx(0.3));
    CHECK(rec.q_to_unit(0.7) == doctest::Approx(0.7));
}

TEST_CASE("rescale rejects bad grids") {
    RegularGrid2 g;
    g.o1 = 0.5;
    CHECK_THROWS_AS(rescale_to_unit(CmpGather(g)), Error);
    RegularGrid2 h;
    h.d1 = -1.0;
    CHECK_THROWS_AS(rescale_to_unit(CmpGather(h)), Error);
}

TEST_CASE("radon grid round trip through the scale record") {
    RegularGrid2 g;
    g.n1 = 101;
    g.d1 = 0.004;
    g.n2 = 61;
    g.d2 = 0.025;
    auto [u, rec] = rescale_to_unit(CmpGather(g));
    RegularGrid2 r;
    r.n1 = 50;
    r.o1 = 0.04;
    r.d1 = 0.0073;
    r.n2 = 40;
    r.o2 = 0.03;
    r.d2 = 0.011;
    const RegularGrid2 back = rec.radon_from_unit(rec.radon_to_unit(r));
    auto ulp = [](double v) { return std::nextafter(v, 1e300) - v; };
    for (std::size_t i = 0; i < r.n1; ++i) CHECK(std::abs(back.x1(i) - r.x1(i)) <= 4 * ulp(r.x1(i)));
    for (std::size_t j = 0; j < r.n2; ++j) CHECK(std::abs(back.x2(j) - r.x2(j)) <= 4 * ulp(r.x2(j)));
}

TEST_CASE("squared-coordinate value and weight") {
    for (double x : {0.1, 0.5, 1.0}) CHECK(squared_coords_value(2.0 * x, x) == doctest::Approx(1.0));
    CHECK(squared_coords_value(0.0, 0.3) == 0.0);
    CHECK_THROWS_AS(squared_coords_value(1.0, 0.0), Error);

    const SectorGeometry g = build_geometry(0.2, 1.0, 0.1);
    const SquaredFrame fr;
    // f = x^2: J f / (2x) = x^2 a^2 2t / |T(t^2, x^2)|^2
    const double pts[5][2] = {{0.3, 0.0}, {0.4, 0.2}, {0.6, 0.5}, {0.9, 0.7}, {1.0, 1.0}};
    for (const auto& p : pts) {
        const double t = p[0], x = p[1];
        const Vec2 q = map_T(g, t * t, x * x);
        const double expect = x * x * g.a * g.a * 2.0 * t / (q.x * q.x + q.y * q.y);
        CHECK(squared_coords_weight(x * x, jacobian_data_over_2x(g, fr, t, x)) == doctest::Approx(expect).epsilon(1e-13));
    }
    CHECK(squared_coords_weight(0.0, jacobian_data_over_2x(g, fr, 0.5, 0.0)) == 0.0);
    CHECK(std::isfinite(jacobian_data_over_2x(g, fr, 0.5, 0.0)));
}

TEST_CASE("field arithmetic") {
    Field2 a(unit_grid(3, 2)), b(unit_grid(3, 2));
    for (std::size_t i = 0; i < 6; ++i) {
        a.data[i] = static_cast<double>(i);
        b.data[i] = 1.0;
    }
    a.axpy(2.0, b);
    CHECK(a(2, 1) == 7.0);
    a.scale(0.5);
    CHECK(a.max_abs() == 3.5);
    CHECK(dot(b, b) == 6.0);
    CHECK(norm2(b) == doctest::Approx(std::sqrt(6.0)));
    a.data[0] = NAN;
    CHECK_FALSE(a.finite());
}
