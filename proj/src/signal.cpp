#include "picture/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace picture {

void RfFrame::validate() const {
    if (!samples.all_finite()) throw std::invalid_argument("RfFrame: non-finite samples");
    if (!(sampling_freq > 2.0 * center_freq))
        throw std::invalid_argument("RfFrame: sampling below Nyquist for center frequency");
}

namespace {

// Direct DFT; frame columns are short enough that O(n^2) is fine and it
// keeps the length-preserving transform exact for any n.
std::vector<std::complex<double>> dft(std::span<const std::complex<double>> x, bool inverse) {
    const size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    const double sign = inverse ? 1.0 : -1.0;
    for (size_t k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (size_t t = 0; t < n; ++t) {
            const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k * t % n) /
                               static_cast<double>(n);
            acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = inverse ? acc / static_cast<double>(n) : acc;
    }
    return out;
}

}  // namespace

void analytic_signal(std::span<const double> x, std::vector<double>& real,
                     std::vector<double>& imag) {
    const size_t n = x.size();
    if (n < 4) throw std::invalid_argument("analytic_signal: length < 4");

    std::vector<std::complex<double>> cx(n);
    for (size_t i = 0; i < n; ++i) cx[i] = {x[i], 0.0};
    auto spec = dft(cx, false);

    // One-sided spectrum: DC (and Nyquist for even n) weight 1, positive
    // frequencies weight 2, negative frequencies zeroed.
    const size_t half = n / 2;
    for (size_t k = 1; k < n; ++k) {
        if (n % 2 == 0 && k == half) continue;  // Nyquist stays at weight 1
        if (k < half || (n % 2 == 1 && k <= half))
            spec[k] *= 2.0;
        else
            spec[k] = 0.0;
    }
    auto analytic = dft(spec, true);

    real.resize(n);
    imag.resize(n);
    for (size_t i = 0; i < n; ++i) {
        real[i] = x[i];  // exact by construction
        imag[i] = analytic[i].imag();
    }
}

namespace {

double abs_percentile(const Raster& r, double p) {
    std::vector<double> a(r.size());
    for (size_t i = 0; i < r.size(); ++i) a[i] = std::abs(r[i]);
    const size_t idx = static_cast<size_t>(p * static_cast<double>(a.size() - 1));
    std::nth_element(a.begin(), a.begin() + idx, a.end());
    return a[idx];
}

}  // namespace

MultiChannelFrame build_channels(const RfFrame& f, const NormalizationPolicy& norm) {
    f.validate();
    const int R = f.samples.rows(), C = f.samples.cols();
    MultiChannelFrame out;
    out.ch_rf = Raster(R, C);
    out.ch_imag = Raster(R, C);
    out.ch_env = Raster(R, C);

    std::vector<double> col(R), re, im;
    for (int c = 0; c < C; ++c) {
        for (int r = 0; r < R; ++r) col[r] = f.samples.at(r, c);
        analytic_signal(col, re, im);
        for (int r = 0; r < R; ++r) {
            out.ch_rf.at(r, c) = re[r];
            out.ch_imag.at(r, c) = im[r];
            out.ch_env.at(r, c) = std::hypot(re[r], im[r]);
        }
    }

    for (int ch = 0; ch < 3; ++ch) {
        Raster& raster = ch == 0 ? out.ch_rf : (ch == 1 ? out.ch_imag : out.ch_env);
        double scale = abs_percentile(raster, norm.percentile);
        if (scale < norm.min_scale) scale = 1.0;
        out.norm_scale[ch] = scale;
        for (size_t i = 0; i < raster.size(); ++i) raster[i] /= scale;
    }
    return out;
}

}  // namespace picture
