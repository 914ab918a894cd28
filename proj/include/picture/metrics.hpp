#ifndef PICTURE_METRICS_HPP
#define PICTURE_METRICS_HPP

#include <string>
#include <vector>

#include "picture/elasticity.hpp"

namespace picture {

struct Rect {
    int row = 0, col = 0, height = 0, width = 0;
};

struct WindowSpec {
    Rect target;
    Rect background;
    int patch_size = 8;
    int patch_stride = 4;

    void validate(int rows, int cols) const;  // throws std::invalid_argument
    std::string to_json() const;
    static WindowSpec from_json(const std::string& text);
};

struct MetricResult {
    double mean = 0.0;
    double stddev = 0.0;
    int n_patches = 0;
};

// Contrast-to-noise ratio over paired target/background patches.
// Patches enumerate in raster order; pairs are index mod shorter list.
// Zero-variance pairs are skipped; throws if none remain.
MetricResult cnr(const Raster& strain, const WindowSpec& w);

// Strain ratio (target mean / background mean) over the same pairing.
// Pairs with |background mean| <= 1e-9 are skipped.
MetricResult sr(const Raster& strain, const WindowSpec& w);

// RMS error over the interior, excluding `margin` pixels on each side.
double rmse_field(const Raster& estimate, const Raster& truth, int margin);

struct Histogram {
    std::vector<long> counts;
    long under = 0, over = 0;
    double lo = 0.0, hi = 1.0;
};

// Histogram of valid-pixel EPR values; out-of-range values land in the
// under/over overflow bins.
Histogram epr_histogram(const EprField& v, int bins, double lo, double hi);

}  // namespace picture

#endif
