#ifndef PICTURE_SIGNAL_HPP
#define PICTURE_SIGNAL_HPP

#include <array>
#include <span>
#include <vector>

#include "picture/raster.hpp"

namespace picture {

// Raw RF echo frame. Rows = axial samples, columns = A-lines.
struct RfFrame {
    Raster samples;
    double sampling_freq = 40.0;  // MHz
    double center_freq = 8.0;     // MHz
    double lateral_pitch = 1.0;   // mm

    void validate() const;
};

// 3-channel representation: raw RF, imaginary part of the analytic
// signal, and the envelope, each scaled by its own normalization.
struct MultiChannelFrame {
    Raster ch_rf, ch_imag, ch_env;
    std::array<double, 3> norm_scale{1.0, 1.0, 1.0};

    int rows() const { return ch_rf.rows(); }
    int cols() const { return ch_rf.cols(); }
    const Raster& channel(int i) const { return i == 0 ? ch_rf : (i == 1 ? ch_imag : ch_env); }
};

struct NormalizationPolicy {
    double percentile = 0.99;  // of absolute value, per channel
    double min_scale = 1e-12;
};

// Analytic signal of a real 1D signal via the one-sided spectrum.
// real == input; imag is the Hilbert transform. Length >= 4, even or odd.
void analytic_signal(std::span<const double> x, std::vector<double>& real,
                     std::vector<double>& imag);

// Column-wise (per A-line) analytic signal and envelope.
MultiChannelFrame build_channels(const RfFrame& f, const NormalizationPolicy& norm = {});

}  // namespace picture

#endif
