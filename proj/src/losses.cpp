#include "picture/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "picture/parallel.hpp"

namespace picture {

void LossWeights::validate() const {
    if (lambda_s < 0 || lambda_v < 0 || lambda_vs < 0 || gamma < 0 || beta < 0)
        throw std::invalid_argument("LossWeights: negative weight");
    if (!(std::isfinite(lambda_s) && std::isfinite(lambda_v) && std::isfinite(lambda_vs) &&
          std::isfinite(gamma) && std::isfinite(beta)))
        throw std::invalid_argument("LossWeights: non-finite weight");
    if (window_n < 1 || window_n % 2 == 0)
        throw std::invalid_argument("LossWeights: window_n must be odd and >= 1");
    if (!(l1_delta >= 0.0) || !std::isfinite(l1_delta))
        throw std::invalid_argument("LossWeights: bad l1_delta");
    if (!(epr_range.ve_min >= 0.0 && epr_range.ve_min < epr_range.ve_max &&
          epr_range.ve_max <= 1.0))
        throw std::invalid_argument("LossWeights: bad EPR range");
}

std::string LossWeights::to_json() const {
    nlohmann::json j;
    j["lambda_s"] = lambda_s;
    j["lambda_v"] = lambda_v;
    j["lambda_vs"] = lambda_vs;
    j["gamma"] = gamma;
    j["beta"] = beta;
    j["window_n"] = window_n;
    j["epr_range"] = {{"ve_min", epr_range.ve_min}, {"ve_max", epr_range.ve_max}};
    j["vd_squared"] = vd_squared;
    j["l1_delta"] = l1_delta;
    return j.dump(2);
}

LossWeights LossWeights::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    LossWeights w;
    w.lambda_s = j.value("lambda_s", w.lambda_s);
    w.lambda_v = j.value("lambda_v", w.lambda_v);
    w.lambda_vs = j.value("lambda_vs", w.lambda_vs);
    w.gamma = j.value("gamma", w.gamma);
    w.beta = j.value("beta", w.beta);
    w.window_n = j.value("window_n", w.window_n);
    if (j.contains("epr_range")) {
        w.epr_range.ve_min = j["epr_range"].value("ve_min", w.epr_range.ve_min);
        w.epr_range.ve_max = j["epr_range"].value("ve_max", w.epr_range.ve_max);
    }
    w.vd_squared = j.value("vd_squared", w.vd_squared);
    w.l1_delta = j.value("l1_delta", w.l1_delta);
    w.validate();
    return w;
}

namespace {

// Charbonnier-smoothed |x| and its derivative; exact L1 when d == 0.
double smooth_abs(double x, double d) {
    return d > 0.0 ? std::sqrt(x * x + d * d) - d : std::abs(x);
}
double smooth_sgn(double x, double d) {
    return d > 0.0 ? x / std::sqrt(x * x + d * d) : sgn(x);
}

// Truncated box sum: out(p) = sum of x over the n x n window around p,
// clipped to the raster bounds.
Raster window_sum(const Raster& x, int n) {
    const int R = x.rows(), C = x.cols(), h = n / 2;
    Raster tmp(R, C), out(R, C);
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            double s = 0.0;
            for (int k = std::max(0, c - h); k <= std::min(C - 1, c + h); ++k)
                s += x.at(r, k);
            tmp.at(r, c) = s;
        }
    }
    for (int c = 0; c < C; ++c) {
        for (int r = 0; r < R; ++r) {
            double s = 0.0;
            for (int k = std::max(0, r - h); k <= std::min(R - 1, r + h); ++k)
                s += tmp.at(k, c);
            out.at(r, c) = s;
        }
    }
    return out;
}

// Warp with per-pixel position derivatives kept for the gradient.
struct WarpDetail {
    MultiChannelFrame frame;
    Mask valid;
    std::array<Raster, 3> d_da;  // d(warped channel)/d(axial sample position)
    std::array<Raster, 3> d_dl;
};

WarpDetail warp_detail(const MultiChannelFrame& in, const DisplacementField& d) {
    const int R = in.rows(), C = in.cols();
    if (d.rows() != R || d.cols() != C)
        throw std::invalid_argument("warp: displacement/frame shape mismatch");
    WarpDetail out;
    out.valid = Mask(R, C);
    out.frame.norm_scale = in.norm_scale;
    Raster* dst[3] = {&out.frame.ch_rf, &out.frame.ch_imag, &out.frame.ch_env};
    for (int ch = 0; ch < 3; ++ch) {
        *dst[ch] = Raster(R, C);
        out.d_da[ch] = Raster(R, C);
        out.d_dl[ch] = Raster(R, C);
    }
    parallel_rows(R, [&](int r) {
        for (int c = 0; c < C; ++c) {
            double a = r + d.w1.at(r, c) / d.spacing_a;
            double l = c + d.w2.at(r, c) / d.spacing_l;
            const bool ok = a >= 0.0 && a <= R - 1 && l >= 0.0 && l <= C - 1;
            out.valid.at(r, c) = ok ? 1 : 0;
            a = std::clamp(a, 0.0, static_cast<double>(R - 1));
            l = std::clamp(l, 0.0, static_cast<double>(C - 1));
            const int r0 = std::min(static_cast<int>(a), R - 2);
            const int c0 = std::min(static_cast<int>(l), C - 2);
            const double fa = a - r0, fl = l - c0;
            for (int ch = 0; ch < 3; ++ch) {
                const Raster& src = in.channel(ch);
                const double p00 = src.at(r0, c0), p01 = src.at(r0, c0 + 1);
                const double p10 = src.at(r0 + 1, c0), p11 = src.at(r0 + 1, c0 + 1);
                dst[ch]->at(r, c) = (1 - fa) * ((1 - fl) * p00 + fl * p01) +
                                    fa * ((1 - fl) * p10 + fl * p11);
                out.d_da[ch].at(r, c) = (1 - fl) * (p10 - p00) + fl * (p11 - p01);
                out.d_dl[ch].at(r, c) = (1 - fa) * (p01 - p00) + fa * (p11 - p10);
            }
        }
    });
    return out;
}

// Masked first derivative of the EPR field. Central falls back to
// one-sided when a neighbor is invalid or out of bounds; contributes
// nothing when the pixel has no usable neighbor.
struct MaskedDerivTerm {
    int p_r, p_c;      // pixel owning the term
    int n1_r, n1_c;    // plus-side sample
    int n2_r, n2_c;    // minus-side sample (== owner for one-sided)
    double coef;       // 1/h or 1/(2h)
    double value;
};

std::vector<MaskedDerivTerm> masked_deriv_terms(const Raster& ve, const Mask& valid, int axis,
                                                double spacing, DerivativeStencil stencil) {
    const int R = ve.rows(), C = ve.cols();
    const int dr = axis == 0 ? 1 : 0, dc = axis == 0 ? 0 : 1;
    std::vector<MaskedDerivTerm> terms;
    auto ok = [&](int r, int c) {
        return r >= 0 && r < R && c >= 0 && c < C && valid.at(r, c);
    };
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            if (!valid.at(r, c)) continue;
            const bool next = ok(r + dr, c + dc);
            const bool prev = ok(r - dr, c - dc);
            MaskedDerivTerm t{r, c, 0, 0, 0, 0, 0.0, 0.0};
            if (stencil == DerivativeStencil::Central && next && prev) {
                t.n1_r = r + dr; t.n1_c = c + dc;
                t.n2_r = r - dr; t.n2_c = c - dc;
                t.coef = 0.5 / spacing;
            } else if (next) {
                t.n1_r = r + dr; t.n1_c = c + dc;
                t.n2_r = r; t.n2_c = c;
                t.coef = 1.0 / spacing;
            } else if (prev) {
                t.n1_r = r; t.n1_c = c;
                t.n2_r = r - dr; t.n2_c = c - dc;
                t.coef = 1.0 / spacing;
            } else {
                continue;
            }
            t.value = t.coef * (ve.at(t.n1_r, t.n1_c) - ve.at(t.n2_r, t.n2_c));
            terms.push_back(t);
        }
    }
    return terms;
}

struct PictureDetail {
    PictureTerms terms;
    EprField field;
    EprMask mask;
    Raster t;  // masked range residual e22 + <ve>*e11
    double mean_denom = 0.0;  // in-range pixel count
    std::vector<MaskedDerivTerm> vs_a, vs_l;
};

PictureDetail picture_detail(const StrainField& s, const LossWeights& w, double floor,
                             DerivativeStencil stencil, double spacing_a, double spacing_l) {
    PictureDetail out;
    out.field = epr(s, floor);
    out.mask = epr_mask(out.field, w.epr_range);
    const size_t P = s.e11.size();
    double ve_sum = 0.0;
    size_t in_range = 0;
    for (size_t i = 0; i < P; ++i)
        if (!out.mask.m[i]) {
            ve_sum += out.field.ve[i];
            ++in_range;
        }
    const double mean =
        in_range > 0 ? ve_sum / static_cast<double>(in_range) : kEprFallbackMean;
    out.mean_denom = static_cast<double>(in_range);

    out.t = Raster(s.rows(), s.cols());
    double sq = 0.0;
    size_t masked = 0;
    for (size_t i = 0; i < P; ++i) {
        if (out.mask.m[i]) {
            out.t[i] = s.e22[i] + mean * s.e11[i];
            sq += out.t[i] * out.t[i];
            ++masked;
        }
    }
    const double msq = sq / static_cast<double>(P);
    out.terms.vd = w.vd_squared ? msq : std::sqrt(msq);
    out.terms.mean_epr = mean;
    out.terms.masked_fraction = static_cast<double>(masked) / static_cast<double>(P);

    out.vs_a = masked_deriv_terms(out.field.ve, out.field.valid, 0, spacing_a, stencil);
    out.vs_l = masked_deriv_terms(out.field.ve, out.field.valid, 1, spacing_l, stencil);
    double va = 0.0, vl = 0.0;
    for (const auto& t : out.vs_a) va += smooth_abs(t.value, w.l1_delta);
    for (const auto& t : out.vs_l) vl += smooth_abs(t.value, w.l1_delta);
    if (!out.vs_a.empty()) va /= static_cast<double>(out.vs_a.size());
    if (!out.vs_l.empty()) vl /= static_cast<double>(out.vs_l.size());
    out.terms.vs = va + w.beta * vl;
    return out;
}

}  // namespace

WarpResult warp(const MultiChannelFrame& frame, const DisplacementField& d) {
    WarpDetail det = warp_detail(frame, d);
    return WarpResult{std::move(det.frame), std::move(det.valid)};
}

namespace {

double data_loss_impl(const MultiChannelFrame& i1, const MultiChannelFrame& i2,
                      const DisplacementField& d, int n, double delta) {
    if (i1.rows() != i2.rows() || i1.cols() != i2.cols())
        throw std::invalid_argument("data_loss: frame shape mismatch");
    if (n < 1 || n % 2 == 0) throw std::invalid_argument("data_loss: window must be odd");
    WarpDetail warped = warp_detail(i2, d);
    const int R = i1.rows(), C = i1.cols();

    Raster diff(R, C), vmask(R, C);
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            const bool ok = warped.valid.at(r, c);
            vmask.at(r, c) = ok ? 1.0 : 0.0;
            if (!ok) continue;
            double s = 0.0;
            for (int ch = 0; ch < 3; ++ch)
                s += smooth_abs(i1.channel(ch).at(r, c) - warped.frame.channel(ch).at(r, c),
                                delta);
            diff.at(r, c) = s / 3.0;
        }
    }
    Raster numer = window_sum(diff, n);
    Raster denom = window_sum(vmask, n);
    double sum = 0.0;
    size_t counted = 0;
    for (size_t i = 0; i < numer.size(); ++i) {
        if (denom[i] > 0.0) {
            sum += numer[i] / denom[i];
            ++counted;
        }
    }
    return counted > 0 ? sum / static_cast<double>(counted) : 0.0;
}

}  // namespace

double data_loss(const MultiChannelFrame& i1, const MultiChannelFrame& i2,
                 const DisplacementField& d, int n) {
    return data_loss_impl(i1, i2, d, n, 0.0);
}

SmoothnessTerms smoothness_loss(const StrainField& s, const LossWeights& w,
                                DerivativeStencil stencil) {
    const size_t P = s.e11.size();
    const double invP = 1.0 / static_cast<double>(P);

    double m11 = 0.0;
    for (size_t i = 0; i < P; ++i) m11 += s.e11[i];
    m11 *= invP;

    SmoothnessTerms out;
    double d11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;
    for (size_t i = 0; i < P; ++i) {
        d11 += smooth_abs(s.e11[i] - m11, w.l1_delta);
        a12 += smooth_abs(s.e12[i], w.l1_delta);
        a21 += smooth_abs(s.e21[i], w.l1_delta);
        a22 += smooth_abs(s.e22[i], w.l1_delta);
    }
    out.s1 = invP * (d11 + w.beta * a12 + 0.5 * a21 + 0.5 * w.beta * a22);

    // Second order: derivatives of the normal strains. Spacing is already
    // folded into the strain rasters' source; derivatives here are taken
    // in pixel units of the strain grid.
    const Raster d11a = derivative(s.e11, 0, 1.0, stencil);
    const Raster d11l = derivative(s.e11, 1, 1.0, stencil);
    const Raster d22a = derivative(s.e22, 0, 1.0, stencil);
    const Raster d22l = derivative(s.e22, 1, 1.0, stencil);
    double sa = 0.0;
    for (size_t i = 0; i < P; ++i)
        sa += smooth_abs(d11a[i], w.l1_delta) + w.beta * smooth_abs(d11l[i], w.l1_delta) +
              0.5 * smooth_abs(d22a[i], w.l1_delta) +
              0.5 * w.beta * smooth_abs(d22l[i], w.l1_delta);
    out.s2 = invP * sa;
    return out;
}

PictureTerms picture_loss(const StrainField& s, const LossWeights& w, double floor,
                          DerivativeStencil stencil) {
    return picture_detail(s, w, floor, stencil, 1.0, 1.0).terms;
}

LossBreakdown total_loss(const MultiChannelFrame& i1, const MultiChannelFrame& i2,
                         const DisplacementField& d, const LossWeights& w, double floor,
                         DerivativeStencil stencil) {
    w.validate();
    LossBreakdown b;
    b.data = data_loss_impl(i1, i2, d, w.window_n, w.l1_delta);
    const StrainField s = strain_from_displacement(d, stencil);
    const SmoothnessTerms sm = smoothness_loss(s, w, stencil);
    b.s1 = sm.s1;
    b.s2 = sm.s2;
    const PictureTerms pt = picture_loss(s, w, floor, stencil);
    b.vd = pt.vd;
    b.vs = pt.vs;
    b.mean_epr = pt.mean_epr;
    b.masked_fraction = pt.masked_fraction;
    b.total = b.data + w.lambda_s * (b.s1 + w.gamma * b.s2) +
              w.lambda_v * (b.vd + w.lambda_vs * b.vs);
    return b;
}

Gradient loss_gradient(const MultiChannelFrame& i1, const MultiChannelFrame& i2,
                       const DisplacementField& d, const LossWeights& w, double floor,
                       DerivativeStencil stencil, LossBreakdown* breakdown) {
    w.validate();
    if (i1.rows() != i2.rows() || i1.cols() != i2.cols() || d.rows() != i1.rows() ||
        d.cols() != i1.cols())
        throw std::invalid_argument("loss_gradient: shape mismatch");
    const int R = i1.rows(), C = i1.cols();
    const size_t P = static_cast<size_t>(R) * C;
    const double invP = 1.0 / static_cast<double>(P);

    Gradient g;
    g.w1 = Raster(R, C);
    g.w2 = Raster(R, C);
    LossBreakdown b;

    // ---- data term ----
    {
        WarpDetail warped = warp_detail(i2, d);
        Raster diff(R, C), vmask(R, C);
        for (int r = 0; r < R; ++r)
            for (int c = 0; c < C; ++c) {
                if (!warped.valid.at(r, c)) continue;
                vmask.at(r, c) = 1.0;
                double s = 0.0;
                for (int ch = 0; ch < 3; ++ch)
                    s += smooth_abs(
                        i1.channel(ch).at(r, c) - warped.frame.channel(ch).at(r, c),
                        w.l1_delta);
                diff.at(r, c) = s / 3.0;
            }
        Raster numer = window_sum(diff, w.window_n);
        Raster denom = window_sum(vmask, w.window_n);
        double sum = 0.0;
        size_t counted = 0;
        Raster u(R, C);
        for (size_t i = 0; i < P; ++i)
            if (denom[i] > 0.0) {
                sum += numer[i] / denom[i];
                ++counted;
            }
        b.data = counted > 0 ? sum / static_cast<double>(counted) : 0.0;
        if (counted > 0) {
            const double invN = 1.0 / static_cast<double>(counted);
            for (size_t i = 0; i < P; ++i)
                if (denom[i] > 0.0) u[i] = invN / denom[i];
            Raster k = window_sum(u, w.window_n);  // dL_D / dDiff at valid pixels
            for (int r = 0; r < R; ++r)
                for (int c = 0; c < C; ++c) {
                    if (!warped.valid.at(r, c)) continue;
                    const double kd = k.at(r, c) / 3.0;
                    double ga = 0.0, gl = 0.0;
                    for (int ch = 0; ch < 3; ++ch) {
                        const double sg = -smooth_sgn(i1.channel(ch).at(r, c) -
                                                          warped.frame.channel(ch).at(r, c),
                                                      w.l1_delta);
                        ga += sg * warped.d_da[ch].at(r, c);
                        gl += sg * warped.d_dl[ch].at(r, c);
                    }
                    g.w1.at(r, c) += kd * ga / d.spacing_a;
                    g.w2.at(r, c) += kd * gl / d.spacing_l;
                }
        }
    }

    // ---- strain-space terms ----
    const StrainField s = strain_from_displacement(d, stencil);
    Raster G11(R, C), G12(R, C), G21(R, C), G22(R, C);

    {  // first-order smoothness
        const SmoothnessTerms sm = smoothness_loss(s, w, stencil);
        b.s1 = sm.s1;
        b.s2 = sm.s2;
        double m11 = 0.0;
        for (size_t i = 0; i < P; ++i) m11 += s.e11[i];
        m11 *= invP;
        double mean_sign = 0.0;
        for (size_t i = 0; i < P; ++i) mean_sign += smooth_sgn(s.e11[i] - m11, w.l1_delta);
        mean_sign *= invP;
        const double c1 = w.lambda_s * invP;
        for (size_t i = 0; i < P; ++i) {
            G11[i] += c1 * (smooth_sgn(s.e11[i] - m11, w.l1_delta) - mean_sign);
            G12[i] += c1 * w.beta * smooth_sgn(s.e12[i], w.l1_delta);
            G21[i] += c1 * 0.5 * smooth_sgn(s.e21[i], w.l1_delta);
            G22[i] += c1 * 0.5 * w.beta * smooth_sgn(s.e22[i], w.l1_delta);
        }
        // second-order smoothness
        const double c2 = w.lambda_s * w.gamma * invP;
        struct Term {
            const Raster* src;
            int axis;
            double coef;
            Raster* dst;
        };
        const Term terms[] = {{&s.e11, 0, c2, &G11},
                              {&s.e11, 1, c2 * w.beta, &G11},
                              {&s.e22, 0, c2 * 0.5, &G22},
                              {&s.e22, 1, c2 * 0.5 * w.beta, &G22}};
        for (const auto& t : terms) {
            Raster der = derivative(*t.src, t.axis, 1.0, stencil);
            Raster sg(R, C);
            for (size_t i = 0; i < P; ++i) sg[i] = t.coef * smooth_sgn(der[i], w.l1_delta);
            derivative_adjoint_accum(sg, t.axis, 1.0, stencil, *t.dst);
        }
    }

    {  // PICTURE term; mask, validity, and the in-range mean are frozen
        PictureDetail pd = picture_detail(s, w, floor, stencil, 1.0, 1.0);
        b.vd = pd.terms.vd;
        b.vs = pd.terms.vs;
        b.mean_epr = pd.terms.mean_epr;
        b.masked_fraction = pd.terms.masked_fraction;

        if (w.lambda_v > 0.0) {
            Raster gve(R, C);  // accumulated dL/dv_e at valid pixels
            double cv = 0.0;
            if (w.vd_squared)
                cv = w.lambda_v * 2.0 * invP;
            else if (pd.terms.vd > 0.0)
                cv = w.lambda_v * invP / pd.terms.vd;
            if (cv != 0.0) {
                double dvd_dmean = 0.0;
                for (size_t i = 0; i < P; ++i)
                    if (pd.mask.m[i]) {
                        G22[i] += cv * pd.t[i];
                        G11[i] += cv * pd.terms.mean_epr * pd.t[i];
                        dvd_dmean += cv * pd.t[i] * s.e11[i];
                    }
                // the range mean itself is a smooth function of the
                // in-range EPR values; route its derivative through v_e
                if (pd.mean_denom > 0.0) {
                    const double per_pixel = dvd_dmean / pd.mean_denom;
                    for (size_t i = 0; i < P; ++i)
                        if (!pd.mask.m[i]) gve[i] += per_pixel;
                }
            }

            // EPR smoothness: chain through v_e = -e22/e11 at valid pixels.
            const double cvs = w.lambda_v * w.lambda_vs;
            auto accum = [&](const std::vector<MaskedDerivTerm>& terms, double weight) {
                if (terms.empty()) return;
                const double c = cvs * weight / static_cast<double>(terms.size());
                for (const auto& t : terms) {
                    const double sg = c * smooth_sgn(t.value, w.l1_delta) * t.coef;
                    if (sg == 0.0) continue;
                    gve.at(t.n1_r, t.n1_c) += sg;
                    gve.at(t.n2_r, t.n2_c) -= sg;
                }
            };
            accum(pd.vs_a, 1.0);
            accum(pd.vs_l, w.beta);
            for (size_t i = 0; i < P; ++i) {
                if (!pd.field.valid[i] || gve[i] == 0.0) continue;
                const double e11 = s.e11[i];
                G22[i] += gve[i] * (-1.0 / e11);
                G11[i] += gve[i] * (s.e22[i] / (e11 * e11));
            }
        }
    }

    derivative_adjoint_accum(G11, 0, d.spacing_a, stencil, g.w1);
    derivative_adjoint_accum(G12, 1, d.spacing_l, stencil, g.w1);
    derivative_adjoint_accum(G21, 0, d.spacing_a, stencil, g.w2);
    derivative_adjoint_accum(G22, 1, d.spacing_l, stencil, g.w2);

    b.total = b.data + w.lambda_s * (b.s1 + w.gamma * b.s2) +
              w.lambda_v * (b.vd + w.lambda_vs * b.vs);
    if (breakdown) *breakdown = b;
    return g;
}

}  // namespace picture
