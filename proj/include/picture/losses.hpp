#ifndef PICTURE_LOSSES_HPP
#define PICTURE_LOSSES_HPP

#include "picture/elasticity.hpp"
#include "picture/signal.hpp"

namespace picture {

struct LossWeights {
    double lambda_s = 1.0;    // smoothness strength
    double lambda_v = 1.0;    // PICTURE strength
    double lambda_vs = 0.1;   // EPR smoothness inside the PICTURE term
    double gamma = 1.0;       // second-order smoothness weight
    double beta = 0.1;        // lateral derivative weight
    int window_n = 3;         // data-loss window, odd
    EprRange epr_range{};
    bool vd_squared = false;  // mean-square variant of the range penalty
    // Charbonnier width for the L1 terms: |x| becomes sqrt(x^2 + d^2) - d
    // in the data, smoothness, and EPR-smoothness terms. Zero keeps the
    // exact L1 forms. A positive width rounds off the kinks so a descent
    // step near a residual zero-crossing costs O(step^2) instead of
    // O(step), which the solver's line search needs to keep moving.
    double l1_delta = 0.0;

    void validate() const;
    std::string to_json() const;
    static LossWeights from_json(const std::string& text);
};

struct LossBreakdown {
    double data = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    double vd = 0.0;
    double vs = 0.0;
    double total = 0.0;
    double mean_epr = 0.0;
    double masked_fraction = 0.0;
};

struct WarpResult {
    MultiChannelFrame frame;
    Mask valid;  // false where the sample position fell outside the frame
};

// Bilinear warp of every channel by the displacement (sample at p + d(p),
// displacement converted to pixels by the field spacing). Out-of-bounds
// positions are clamped and flagged invalid.
WarpResult warp(const MultiChannelFrame& frame, const DisplacementField& d);

// Mean over pixels of the n x n window-averaged |I1 - warp(I2)|, averaged
// over channels. Windows truncate at borders; invalid warp pixels are
// excluded, and pixels whose window is fully invalid drop out of the mean.
double data_loss(const MultiChannelFrame& i1, const MultiChannelFrame& i2,
                 const DisplacementField& d, int n);

// First- and second-order strain smoothness terms.
struct SmoothnessTerms {
    double s1 = 0.0;
    double s2 = 0.0;
};
SmoothnessTerms smoothness_loss(const StrainField& s, const LossWeights& w,
                                DerivativeStencil stencil);

struct PictureTerms {
    double vd = 0.0;
    double vs = 0.0;
    double mean_epr = 0.0;
    double masked_fraction = 0.0;
};
// EPR range penalty and EPR smoothness over valid-EPR pixels.
PictureTerms picture_loss(const StrainField& s, const LossWeights& w, double floor,
                          DerivativeStencil stencil);

LossBreakdown total_loss(const MultiChannelFrame& i1, const MultiChannelFrame& i2,
                         const DisplacementField& d, const LossWeights& w,
                         double floor = kEprFloor,
                         DerivativeStencil stencil = DerivativeStencil::Central);

struct Gradient {
    Raster w1, w2;
};

// Analytic gradient of total_loss with respect to the displacement.
// The EPR mask, validity raster, and in-range mean are held fixed;
// L1 terms use sign() with sign(0) = 0. Optionally reports the loss
// evaluated on the way.
Gradient loss_gradient(const MultiChannelFrame& i1, const MultiChannelFrame& i2,
                       const DisplacementField& d, const LossWeights& w,
                       double floor = kEprFloor,
                       DerivativeStencil stencil = DerivativeStencil::Central,
                       LossBreakdown* breakdown = nullptr);

}  // namespace picture

#endif
