#ifndef PICTURE_ELASTICITY_HPP
#define PICTURE_ELASTICITY_HPP

#include "picture/raster.hpp"

namespace picture {

enum class DerivativeStencil { Forward, Central };

// Per-pixel axial (w1) and lateral (w2) displacement. Spacing converts
// pixel indices to physical units; defaults keep everything in pixels.
struct DisplacementField {
    Raster w1;  // axial displacement
    Raster w2;  // lateral displacement
    double spacing_a = 1.0;
    double spacing_l = 1.0;

    int rows() const { return w1.rows(); }
    int cols() const { return w1.cols(); }
};

// In-plane strain components, eij = dWi/dj.
struct StrainField {
    Raster e11, e12, e21, e22;

    int rows() const { return e11.rows(); }
    int cols() const { return e11.cols(); }
};

// Effective Poisson's ratio -e22/e11. `valid` marks pixels where |e11|
// cleared the division floor.
struct EprField {
    Raster ve;
    Mask valid;
};

struct EprRange {
    double ve_min = 0.1;
    double ve_max = 0.6;
};

// 1 where the EPR is out of range or undefined, 0 where accepted.
struct EprMask {
    Mask m;
};

struct MaterialParams {
    double youngs_modulus = 20.0;  // kPa
    double poisson_ratio = 0.49;
};

constexpr double kEprFloor = 1e-6;
constexpr double kEprFallbackMean = 0.35;

// d/d(axis) of a raster in physical units. axis 0 = axial (rows),
// axis 1 = lateral (cols). Central stencil uses one-sided differences at
// the borders; Forward uses forward differences with a backward fallback
// at the far border.
Raster derivative(const Raster& x, int axis, double spacing, DerivativeStencil stencil);

// Accumulates the adjoint of `derivative` into `out`:
// <derivative(x), g> == <x, adjoint(g)> for all x, g.
void derivative_adjoint_accum(const Raster& g, int axis, double spacing,
                              DerivativeStencil stencil, Raster& out);

StrainField strain_from_displacement(const DisplacementField& d,
                                     DerivativeStencil stencil = DerivativeStencil::Central);

EprField epr(const StrainField& s, double floor = kEprFloor);

EprMask epr_mask(const EprField& v, const EprRange& r);

// Mean of ve over accepted (m = 0) pixels; kEprFallbackMean when none.
double mean_epr_in_range(const EprField& v, const EprMask& m);

// e22 = -v * e11 under uniaxial stress.
Raster uniaxial_lateral_strain(const Raster& e11, double v);

}  // namespace picture

#endif
