#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "picture/elasticity.hpp"

using namespace picture;

namespace {

DisplacementField make_field(int R, int C) {
    DisplacementField d;
    d.w1 = Raster(R, C);
    d.w2 = Raster(R, C);
    return d;
}

}  // namespace

TEST_CASE("strain of zero displacement is zero") {
    auto d = make_field(6, 6);
    const StrainField s = strain_from_displacement(d);
    for (size_t i = 0; i < s.e11.size(); ++i) {
        CHECK(s.e11[i] == 0.0);
        CHECK(s.e12[i] == 0.0);
        CHECK(s.e21[i] == 0.0);
        CHECK(s.e22[i] == 0.0);
    }
}

TEST_CASE("strain of constant displacement is zero") {
    auto d = make_field(5, 7);
    d.w1.fill(3.25);
    d.w2.fill(-1.5);
    const StrainField s = strain_from_displacement(d);
    for (size_t i = 0; i < s.e11.size(); ++i) {
        CHECK(s.e11[i] == 0.0);
        CHECK(s.e22[i] == 0.0);
    }
}

TEST_CASE("linear axial ramp gives exact constant strain") {
    const double spacing = 0.25;
    auto d = make_field(8, 8);
    d.spacing_a = spacing;
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) d.w1.at(r, c) = -0.01 * r * spacing;
    for (auto st : {DerivativeStencil::Central, DerivativeStencil::Forward}) {
        const StrainField s = strain_from_displacement(d, st);
        for (size_t i = 0; i < s.e11.size(); ++i) {
            CHECK(s.e11[i] == doctest::Approx(-0.01).epsilon(1e-12));
            CHECK(s.e12[i] == 0.0);
        }
    }
}

TEST_CASE("polynomial field matches symbolic derivatives at interior pixels") {
    // w1 = a^2 + 2*a*l, w2 = 3*l^2 - a*l  =>
    // e11 = 2a + 2l, e12 = 2a, e21 = -l, e22 = 6l - a
    auto d = make_field(8, 8);
    for (int a = 0; a < 8; ++a)
        for (int l = 0; l < 8; ++l) {
            d.w1.at(a, l) = a * a + 2.0 * a * l;
            d.w2.at(a, l) = 3.0 * l * l - a * l;
        }
    const StrainField s = strain_from_displacement(d, DerivativeStencil::Central);
    for (int a = 1; a < 7; ++a)
        for (int l = 1; l < 7; ++l) {
            CHECK(s.e11.at(a, l) == doctest::Approx(2.0 * a + 2.0 * l).epsilon(1e-6));
            CHECK(s.e12.at(a, l) == doctest::Approx(2.0 * a).epsilon(1e-6));
            CHECK(s.e21.at(a, l) == doctest::Approx(-l).epsilon(1e-6));
            CHECK(s.e22.at(a, l) == doctest::Approx(6.0 * l - a).epsilon(1e-6));
        }
}

TEST_CASE("shape under 3x3 is rejected") {
    auto d = make_field(2, 5);
    CHECK_THROWS_AS(strain_from_displacement(d), std::invalid_argument);
}

TEST_CASE("derivative adjoint identity <Dx,y> == <x,D'y>") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    for (auto st : {DerivativeStencil::Central, DerivativeStencil::Forward}) {
        for (int axis : {0, 1}) {
            Raster x(9, 7), y(9, 7);
            for (size_t i = 0; i < x.size(); ++i) {
                x[i] = u(rng);
                y[i] = u(rng);
            }
            const Raster dx = derivative(x, axis, 0.5, st);
            Raster aty(9, 7);
            derivative_adjoint_accum(y, axis, 0.5, st, aty);
            double lhs = 0, rhs = 0;
            for (size_t i = 0; i < x.size(); ++i) {
                lhs += dx[i] * y[i];
                rhs += x[i] * aty[i];
            }
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        }
    }
}

TEST_CASE("epr direct division") {
    StrainField s;
    s.e11 = Raster(4, 4, -0.02);
    s.e22 = Raster(4, 4, 0.01);
    s.e12 = Raster(4, 4);
    s.e21 = Raster(4, 4);
    const EprField f = epr(s);
    for (size_t i = 0; i < f.ve.size(); ++i) {
        CHECK(f.valid[i] == 1);
        CHECK(f.ve[i] == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("epr floors near-zero axial strain") {
    StrainField s;
    s.e11 = Raster(3, 3, -0.01);
    s.e22 = Raster(3, 3, 0.004);
    s.e12 = Raster(3, 3);
    s.e21 = Raster(3, 3);
    s.e11.at(1, 1) = 0.0;
    const EprField f = epr(s);
    CHECK(f.valid.at(1, 1) == 0);
    CHECK(f.ve.at(1, 1) == 0.0);
    CHECK(f.valid.at(0, 0) == 1);
}

TEST_CASE("epr computes out-of-range values too") {
    StrainField s;
    s.e11 = Raster(3, 3, -0.01);
    s.e22 = Raster(3, 3, -0.007);
    s.e12 = Raster(3, 3);
    s.e21 = Raster(3, 3);
    const EprField f = epr(s);
    CHECK(f.ve.at(0, 0) == doctest::Approx(-0.7).epsilon(1e-12));
}

TEST_CASE("epr_mask range and boundaries") {
    StrainField s;
    s.e11 = Raster(1, 4, -0.01);
    s.e22 = Raster(1, 4);
    s.e12 = Raster(1, 4);
    s.e21 = Raster(1, 4);
    s.e22.at(0, 0) = 0.0035;   // ve 0.35 -> accepted
    s.e22.at(0, 1) = 0.007;    // ve 0.7  -> masked
    s.e22.at(0, 2) = 0.001;    // ve 0.1  -> boundary, strict, masked
    s.e22.at(0, 3) = 0.006;    // ve 0.6  -> boundary, strict, masked
    const EprMask m = epr_mask(epr(s), EprRange{});
    CHECK(m.m.at(0, 0) == 0);
    CHECK(m.m.at(0, 1) == 1);
    CHECK(m.m.at(0, 2) == 1);
    CHECK(m.m.at(0, 3) == 1);
}

TEST_CASE("invalid pixels are masked") {
    StrainField s;
    s.e11 = Raster(2, 2, 0.0);
    s.e22 = Raster(2, 2, 0.0);
    s.e12 = Raster(2, 2);
    s.e21 = Raster(2, 2);
    const EprMask m = epr_mask(epr(s), EprRange{});
    CHECK(m.m.count() == 4);
}

TEST_CASE("epr_mask is scale invariant in the strain pair") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.03, 0.03);
    StrainField s;
    s.e11 = Raster(8, 8);
    s.e22 = Raster(8, 8);
    s.e12 = Raster(8, 8);
    s.e21 = Raster(8, 8);
    for (size_t i = 0; i < s.e11.size(); ++i) {
        s.e11[i] = u(rng);
        s.e22[i] = u(rng);
    }
    const EprField f0 = epr(s);
    StrainField sc = s;
    for (size_t i = 0; i < s.e11.size(); ++i) {
        sc.e11[i] *= 7.0;
        sc.e22[i] *= 7.0;
    }
    const EprField f1 = epr(sc);
    const EprMask m0 = epr_mask(f0, EprRange{});
    const EprMask m1 = epr_mask(f1, EprRange{});
    for (size_t i = 0; i < m0.m.size(); ++i)
        if (f0.valid[i] && f1.valid[i]) CHECK(m0.m[i] == m1.m[i]);
}

TEST_CASE("mean_epr_in_range") {
    SUBCASE("constant field") {
        StrainField s;
        s.e11 = Raster(2, 2, -0.01);
        s.e22 = Raster(2, 2, 0.004);
        s.e12 = Raster(2, 2);
        s.e21 = Raster(2, 2);
        const EprField f = epr(s);
        CHECK(mean_epr_in_range(f, epr_mask(f, EprRange{})) == doctest::Approx(0.4));
    }
    SUBCASE("two-element mean") {
        EprField f;
        f.ve = Raster(1, 3);
        f.valid = Mask(1, 3, 1);
        f.ve.at(0, 0) = 0.2;
        f.ve.at(0, 1) = 0.4;
        f.ve.at(0, 2) = 0.9;
        const EprMask m = epr_mask(f, EprRange{});
        CHECK(mean_epr_in_range(f, m) == doctest::Approx(0.3).epsilon(1e-12));
    }
    SUBCASE("all masked falls back to range midpoint") {
        EprField f;
        f.ve = Raster(2, 2, 0.9);
        f.valid = Mask(2, 2, 1);
        const EprMask m = epr_mask(f, EprRange{});
        CHECK(mean_epr_in_range(f, m) == doctest::Approx(0.35));
        CHECK(0.35 == doctest::Approx(0.5 * (EprRange{}.ve_min + EprRange{}.ve_max)));
    }
}

TEST_CASE("mean_epr_in_range stays inside the accepted range") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int trial = 0; trial < 30; ++trial) {
        EprField f;
        f.ve = Raster(6, 6);
        f.valid = Mask(6, 6, 1);
        for (size_t i = 0; i < f.ve.size(); ++i) f.ve[i] = u(rng);
        const EprMask m = epr_mask(f, EprRange{});
        const double mean = mean_epr_in_range(f, m);
        CHECK(mean >= EprRange{}.ve_min);
        CHECK(mean <= EprRange{}.ve_max);
    }
}

TEST_CASE("uniaxial lateral strain") {
    Raster e11(3, 3, -0.01);
    const Raster e22 = uniaxial_lateral_strain(e11, 0.5);
    for (size_t i = 0; i < e22.size(); ++i) CHECK(e22[i] == doctest::Approx(0.005));
    CHECK_THROWS_AS(uniaxial_lateral_strain(e11, 1.5), std::invalid_argument);
}

TEST_CASE("epr recovers the Poisson ratio from uniaxial strain") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (double v : {0.2, 0.35, 0.5}) {
        StrainField s;
        s.e11 = Raster(6, 6);
        for (size_t i = 0; i < s.e11.size(); ++i) s.e11[i] = u(rng);
        s.e22 = uniaxial_lateral_strain(s.e11, v);
        s.e12 = Raster(6, 6);
        s.e21 = Raster(6, 6);
        const EprField f = epr(s);
        for (size_t i = 0; i < f.ve.size(); ++i)
            if (f.valid[i]) CHECK(f.ve[i] == doctest::Approx(v).epsilon(1e-12));
    }
}
