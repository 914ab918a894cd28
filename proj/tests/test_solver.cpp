#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "picture/phantom.hpp"
#include "picture/solver.hpp"

using namespace picture;

namespace {

RfFrame speckle_frame(uint64_t seed, int rows = 64, int cols = 64) {
    PhantomSpec spec;
    spec.rows = rows;
    spec.cols = cols;
    spec.seed = seed;
    const ScattererField sc = make_scatterers(spec);
    return render_rf(sc, PsfSpec{}, rows, cols);
}

RfFrame shifted_frame(uint64_t seed, double shift_a, int rows = 64, int cols = 64) {
    PhantomSpec spec;
    spec.rows = rows;
    spec.cols = cols;
    spec.seed = seed;
    ScattererField sc = make_scatterers(spec);
    for (auto& p : sc.pos_a) p += shift_a;
    return render_rf(sc, PsfSpec{}, rows, cols);
}

SolverConfig quick_config() {
    SolverConfig cfg;
    cfg.pyramid_levels = 2;
    cfg.iterations_per_level = 60;
    cfg.step_size = 0.05;
    return cfg;
}

}  // namespace

TEST_CASE("identical frames converge to zero displacement") {
    const RfFrame f = speckle_frame(1);
    SolverConfig cfg = quick_config();
    cfg.iterations_per_level = 50;
    const SolveReport rep = solve(f, f, cfg);
    double linf = 0;
    for (size_t i = 0; i < rep.field.w1.size(); ++i) {
        linf = std::max(linf, std::abs(rep.field.w1[i]));
        linf = std::max(linf, std::abs(rep.field.w2[i]));
    }
    CHECK(linf < 0.01);
}

TEST_CASE("pure integer shift is recovered through the pyramid") {
    const RfFrame i1 = speckle_frame(2);
    const RfFrame i2 = shifted_frame(2, 1.0);
    SolverConfig cfg = quick_config();
    cfg.iterations_per_level = 120;
    const SolveReport rep = solve(i1, i2, cfg);
    // interior, away from the rendering edge effects
    for (int r = 8; r < 56; ++r)
        for (int c = 8; c < 56; ++c)
            CHECK(std::abs(rep.field.w1.at(r, c) - 1.0) < 0.1);
}

TEST_CASE("accepted loss trace is non-increasing at every level") {
    const RfFrame i1 = speckle_frame(3);
    const RfFrame i2 = shifted_frame(3, 0.5);
    const SolveReport rep = solve(i1, i2, quick_config());
    REQUIRE(!rep.trace.empty());
    for (size_t i = 1; i < rep.trace.size(); ++i) {
        // segment boundaries: new level, or iteration counter reset when
        // the finest level restarts with the EPR terms switched on
        if (rep.trace[i].level != rep.trace[i - 1].level) continue;
        if (rep.trace[i].iter <= rep.trace[i - 1].iter) continue;
        CHECK(rep.trace[i].loss.total <= rep.trace[i - 1].loss.total + 1e-6);
    }
}

TEST_CASE("solve is deterministic") {
    const RfFrame i1 = speckle_frame(4);
    const RfFrame i2 = shifted_frame(4, 0.5);
    SolverConfig cfg = quick_config();
    cfg.iterations_per_level = 30;
    const SolveReport a = solve(i1, i2, cfg);
    const SolveReport b = solve(i1, i2, cfg);
    REQUIRE(a.field.w1.size() == b.field.w1.size());
    for (size_t i = 0; i < a.field.w1.size(); ++i) {
        CHECK(a.field.w1[i] == b.field.w1[i]);
        CHECK(a.field.w2[i] == b.field.w2[i]);
    }
    REQUIRE(a.trace.size() == b.trace.size());
    for (size_t i = 0; i < a.trace.size(); ++i)
        CHECK(a.trace[i].loss.total == b.trace[i].loss.total);
}

TEST_CASE("axial seed on identical frames is zero") {
    const RfFrame f = speckle_frame(5);
    const DisplacementField d = axial_seed(f, f);
    for (size_t i = 0; i < d.w1.size(); ++i) {
        CHECK(d.w1[i] == 0.0);
        CHECK(d.w2[i] == 0.0);
    }
}

TEST_CASE("axial seed finds a global integer shift") {
    for (double k : {2.0, -3.0}) {
        const RfFrame i1 = speckle_frame(6);
        const RfFrame i2 = shifted_frame(6, k);
        const DisplacementField d = axial_seed(i1, i2);
        // border blocks may lack overlap; check the interior
        for (int r = 16; r < 48; ++r)
            for (int c = 16; c < 48; ++c) CHECK(d.w1.at(r, c) == doctest::Approx(k));
    }
}

TEST_CASE("axial seed slope approximates the applied strain") {
    PhantomSpec spec;
    spec.rows = 192;
    spec.cols = 64;
    spec.applied_strain = -0.02;
    spec.seed = 7;
    const FramePair p = make_pair(spec);
    const DisplacementField d = axial_seed(p.i1, p.i2);
    // least-squares slope of the row-mean axial seed
    const int R = spec.rows;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int r = 0; r < R; ++r) {
        double mean = 0;
        for (int c = 0; c < spec.cols; ++c) mean += d.w1.at(r, c);
        mean /= spec.cols;
        sx += r;
        sy += mean;
        sxx += double(r) * r;
        sxy += r * mean;
    }
    const double slope = (R * sxy - sx * sy) / (R * sxx - sx * sx);
    CHECK(slope == doctest::Approx(-0.02).epsilon(0.3));
}

TEST_CASE("config validation") {
    SolverConfig cfg;
    cfg.pyramid_levels = 5;
    CHECK_THROWS_AS(cfg.validate(128, 128), std::invalid_argument);  // log2(128)-3 = 4
    cfg.pyramid_levels = 4;
    CHECK_NOTHROW(cfg.validate(128, 128));
    cfg.step_size = 0.0;
    CHECK_THROWS_AS(cfg.validate(128, 128), std::invalid_argument);
}

TEST_CASE("config JSON round-trip") {
    SolverConfig cfg;
    cfg.pyramid_levels = 4;
    cfg.init = InitMode::Zero;
    cfg.weights.lambda_v = 0.5;
    cfg.stencil = DerivativeStencil::Forward;
    const SolverConfig t = SolverConfig::from_json(cfg.to_json());
    CHECK(t.pyramid_levels == 4);
    CHECK(t.init == InitMode::Zero);
    CHECK(t.weights.lambda_v == 0.5);
    CHECK(t.stencil == DerivativeStencil::Forward);
    CHECK(t.beta1 == cfg.beta1);
    const SolverConfig defaults = SolverConfig::from_json("{}");
    CHECK(defaults.init == InitMode::AxialSeed);
    CHECK(defaults.weights.lambda_v == 1.0);
    CHECK(defaults.weights.lambda_vs == 0.0);
    CHECK(defaults.weights.l1_delta == 1e-3);
    CHECK(defaults.epr_floor == 1e-3);
}

TEST_CASE("trace CSV has the contract columns") {
    const RfFrame f = speckle_frame(8, 32, 32);
    SolverConfig cfg;
    cfg.pyramid_levels = 1;
    cfg.iterations_per_level = 3;
    const SolveReport rep = solve(f, f, cfg);
    const std::string csv = trace_csv(rep);
    CHECK(csv.rfind("iteration,level,data,s1,s2,vd,vs,total\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + rep.trace.size());
}
