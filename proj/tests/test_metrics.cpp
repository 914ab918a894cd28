#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "picture/metrics.hpp"

using namespace picture;

namespace {

WindowSpec default_windows() {
    WindowSpec w;
    w.target = {8, 8, 20, 20};
    w.background = {36, 8, 20, 20};
    return w;
}

Raster gaussian_raster(std::mt19937_64& rng, int R, int C, double mu, double sigma) {
    std::normal_distribution<double> n(mu, sigma);
    Raster r(R, C);
    for (size_t i = 0; i < r.size(); ++i) r[i] = n(rng);
    return r;
}

}  // namespace

TEST_CASE("degenerate constant windows raise") {
    Raster r(64, 64, 1.0);
    for (int i = 36; i < 56; ++i)
        for (int j = 8; j < 28; ++j) r.at(i, j) = 2.0;
    CHECK_THROWS(cnr(r, default_windows()));
}

TEST_CASE("equal means give zero CNR") {
    std::mt19937_64 rng(1);
    Raster r = gaussian_raster(rng, 64, 64, 1.0, 0.0);
    // add identical noise pattern to both windows so the means match
    const WindowSpec w = default_windows();
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) {
            const double v = ((i * 31 + j * 17) % 7) * 0.1;
            r.at(w.target.row + i, w.target.col + j) = 1.0 + v;
            r.at(w.background.row + i, w.background.col + j) = 1.0 + v;
        }
    const MetricResult res = cnr(r, w);
    CHECK(res.mean == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("CNR Monte-Carlo matches the closed form") {
    // mu_b = 2, mu_t = 1, sigma = 0.5 both: per-pair CNR ~ sqrt(2/0.5) = 2
    std::mt19937_64 rng(2);
    double sum = 0;
    const int trials = 20;
    for (int t = 0; t < trials; ++t) {
        Raster r(64, 64);
        const WindowSpec w = default_windows();
        std::normal_distribution<double> nt(1.0, 0.5), nb(2.0, 0.5);
        for (int i = 0; i < 64; ++i)
            for (int j = 0; j < 64; ++j) r.at(i, j) = nb(rng);
        for (int i = 0; i < w.target.height; ++i)
            for (int j = 0; j < w.target.width; ++j)
                r.at(w.target.row + i, w.target.col + j) = nt(rng);
        sum += cnr(r, w).mean;
    }
    CHECK(sum / trials == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("SR trivial ratios") {
    Raster r(64, 64, 0.01);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> jitter(-1e-5, 1e-5);
    for (size_t i = 0; i < r.size(); ++i) r[i] += jitter(rng);
    const WindowSpec w = default_windows();
    SUBCASE("identical statistics give SR near 1") {
        CHECK(sr(r, w).mean == doctest::Approx(1.0).epsilon(0.01));
    }
    SUBCASE("halved target strain gives SR near 0.5") {
        for (int i = 0; i < w.target.height; ++i)
            for (int j = 0; j < w.target.width; ++j) r.at(w.target.row + i, w.target.col + j) *= 0.5;
        CHECK(sr(r, w).mean == doctest::Approx(0.5).epsilon(0.01));
    }
}

TEST_CASE("CNR is affine invariant, SR is scale invariant only") {
    std::mt19937_64 rng(4);
    Raster r = gaussian_raster(rng, 64, 64, 0.01, 0.003);
    const WindowSpec w = default_windows();
    for (int i = 0; i < w.target.height; ++i)
        for (int j = 0; j < w.target.width; ++j) r.at(w.target.row + i, w.target.col + j) *= 0.4;

    Raster affine(64, 64);
    const double a = -3.7, b = 0.05;
    for (size_t i = 0; i < r.size(); ++i) affine[i] = a * r[i] + b;
    CHECK(cnr(affine, w).mean == doctest::Approx(cnr(r, w).mean).epsilon(1e-9));

    Raster scaled(64, 64);
    for (size_t i = 0; i < r.size(); ++i) scaled[i] = 2.5 * r[i];
    CHECK(sr(scaled, w).mean == doctest::Approx(sr(r, w).mean).epsilon(1e-9));
    Raster shifted(64, 64);
    for (size_t i = 0; i < r.size(); ++i) shifted[i] = r[i] + 0.05;
    CHECK(sr(shifted, w).mean != doctest::Approx(sr(r, w).mean).epsilon(1e-4));
}

TEST_CASE("metric evaluation is deterministic") {
    std::mt19937_64 rng(5);
    const Raster r = gaussian_raster(rng, 64, 64, 0.01, 0.002);
    const WindowSpec w = default_windows();
    const MetricResult a = cnr(r, w), b = cnr(r, w);
    CHECK(a.mean == b.mean);
    CHECK(a.stddev == b.stddev);
    CHECK(a.n_patches == b.n_patches);
    CHECK(a.n_patches >= 4);
}

TEST_CASE("window validation") {
    WindowSpec w = default_windows();
    w.target.row = 0;  // inside the 2-pixel strain border
    CHECK_THROWS_AS(w.validate(64, 64), std::invalid_argument);
    w = default_windows();
    w.target.height = 9;  // only one patch row -> fewer than 4 patches
    w.target.width = 9;
    CHECK_THROWS_AS(w.validate(64, 64), std::invalid_argument);
}

TEST_CASE("rmse_field") {
    std::mt19937_64 rng(6);
    const Raster t = gaussian_raster(rng, 32, 32, 0.0, 1.0);
    CHECK(rmse_field(t, t, 2) == 0.0);

    Raster shifted(32, 32);
    for (size_t i = 0; i < t.size(); ++i) shifted[i] = t[i] + 0.01;
    CHECK(rmse_field(shifted, t, 2) == doctest::Approx(0.01).epsilon(1e-12));

    const Raster e = gaussian_raster(rng, 32, 32, 0.0, 1.0);
    double sq = 0;
    long n = 0;
    for (int r = 4; r < 28; ++r)
        for (int c = 4; c < 28; ++c) {
            sq += (e.at(r, c) - t.at(r, c)) * (e.at(r, c) - t.at(r, c));
            ++n;
        }
    CHECK(rmse_field(e, t, 4) == doctest::Approx(std::sqrt(sq / n)).epsilon(1e-12));

    CHECK_THROWS_AS(rmse_field(e, Raster(16, 16), 2), std::invalid_argument);
    CHECK_THROWS_AS(rmse_field(e, t, 1), std::invalid_argument);
}

TEST_CASE("epr histogram") {
    SUBCASE("constant value lands in the middle bin") {
        EprField f;
        f.ve = Raster(10, 10, 0.35);
        f.valid = Mask(10, 10, 1);
        const Histogram h = epr_histogram(f, 5, 0.1, 0.6);
        CHECK(h.counts[2] == 100);
        CHECK(h.counts[0] + h.counts[1] + h.counts[3] + h.counts[4] == 0);
        CHECK(h.under == 0);
        CHECK(h.over == 0);
    }
    SUBCASE("invalid pixels are ignored") {
        EprField f;
        f.ve = Raster(10, 10, 0.35);
        f.valid = Mask(10, 10, 0);
        const Histogram h = epr_histogram(f, 5, 0.1, 0.6);
        for (long c : h.counts) CHECK(c == 0);
    }
    SUBCASE("uniform values spread evenly with overflow bins") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(0.1, 0.6);
        EprField f;
        f.ve = Raster(100, 100);
        f.valid = Mask(100, 100, 1);
        for (size_t i = 0; i < f.ve.size(); ++i) f.ve[i] = u(rng);
        const Histogram h = epr_histogram(f, 10, 0.1, 0.6);
        const double sigma = std::sqrt(1000.0);
        for (long c : h.counts) CHECK(std::abs(c - 1000.0) < 3 * sigma);
    }
}
