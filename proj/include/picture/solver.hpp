#ifndef PICTURE_SOLVER_HPP
#define PICTURE_SOLVER_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "picture/losses.hpp"

namespace picture {

enum class InitMode { Zero, AxialSeed };

// Loss configuration the solver ships with. Two deviations from the
// plain LossWeights defaults: the EPR smoothness term is off (on the
// pointwise EPR ratio it amplifies noise faster than it smooths), and
// the L1 terms are Charbonnier-rounded so the line search keeps making
// progress near residual zero-crossings.
inline LossWeights solver_default_weights() {
    LossWeights w;
    w.lambda_vs = 0.0;
    w.l1_delta = 1e-3;
    return w;
}

struct SolverConfig {
    int pyramid_levels = 3;
    int iterations_per_level = 300;
    double step_size = 0.05;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    double convergence_tol = 1e-6;
    InitMode init = InitMode::AxialSeed;
    LossWeights weights = solver_default_weights();
    uint64_t seed = 0;
    DerivativeStencil stencil = DerivativeStencil::Central;
    // Division floor for the solver's own EPR evaluations. Much higher
    // than the loss-module floor: with a 1e-6 floor a near-zero axial
    // strain admits |v_e| ~ 1e4 and the EPR terms blow up on noise.
    double epr_floor = 1e-3;

    void validate(int rows, int cols) const;
    std::string to_json() const;
    static SolverConfig from_json(const std::string& text);
};

struct IterRecord {
    int level = 0;
    int iter = 0;
    LossBreakdown loss;
    double step = 0.0;
};

struct SolveReport {
    DisplacementField field;
    std::vector<IterRecord> trace;
    double wall_time_s = 0.0;
    bool converged = false;
};

struct SolverDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Coarse-to-fine minimization of the total loss by an adaptive
// per-parameter first-order update with step halving on loss increase.
SolveReport solve(const RfFrame& i1, const RfFrame& i2, const SolverConfig& cfg);

// Block-wise 1D axial cross-correlation seed (integer shifts, median
// filtered); lateral component zero.
DisplacementField axial_seed(const RfFrame& i1, const RfFrame& i2);

// Trace as CSV: iteration, level, data, s1, s2, vd, vs, total.
std::string trace_csv(const SolveReport& report);

}  // namespace picture

#endif
