#include "picture/elasticity.hpp"

#include <stdexcept>

namespace picture {

Raster derivative(const Raster& x, int axis, double spacing, DerivativeStencil stencil) {
    const int R = x.rows(), C = x.cols();
    Raster out(R, C);
    const double inv = 1.0 / spacing;
    if (axis == 0) {
        for (int c = 0; c < C; ++c) {
            for (int r = 0; r < R; ++r) {
                double d;
                if (stencil == DerivativeStencil::Central) {
                    if (r == 0)
                        d = x.at(1, c) - x.at(0, c);
                    else if (r == R - 1)
                        d = x.at(R - 1, c) - x.at(R - 2, c);
                    else
                        d = 0.5 * (x.at(r + 1, c) - x.at(r - 1, c));
                } else {
                    d = (r < R - 1) ? x.at(r + 1, c) - x.at(r, c)
                                    : x.at(r, c) - x.at(r - 1, c);
                }
                out.at(r, c) = d * inv;
            }
        }
    } else {
        for (int r = 0; r < R; ++r) {
            for (int c = 0; c < C; ++c) {
                double d;
                if (stencil == DerivativeStencil::Central) {
                    if (c == 0)
                        d = x.at(r, 1) - x.at(r, 0);
                    else if (c == C - 1)
                        d = x.at(r, C - 1) - x.at(r, C - 2);
                    else
                        d = 0.5 * (x.at(r, c + 1) - x.at(r, c - 1));
                } else {
                    d = (c < C - 1) ? x.at(r, c + 1) - x.at(r, c)
                                    : x.at(r, c) - x.at(r, c - 1);
                }
                out.at(r, c) = d * inv;
            }
        }
    }
    return out;
}

void derivative_adjoint_accum(const Raster& g, int axis, double spacing,
                              DerivativeStencil stencil, Raster& out) {
    const int R = g.rows(), C = g.cols();
    const double inv = 1.0 / spacing;
    auto add = [&](int r, int c, double v) { out.at(r, c) += v * inv; };
    if (axis == 0) {
        for (int c = 0; c < C; ++c) {
            for (int r = 0; r < R; ++r) {
                const double gv = g.at(r, c);
                if (gv == 0.0) continue;
                if (stencil == DerivativeStencil::Central) {
                    if (r == 0) {
                        add(1, c, gv);
                        add(0, c, -gv);
                    } else if (r == R - 1) {
                        add(R - 1, c, gv);
                        add(R - 2, c, -gv);
                    } else {
                        add(r + 1, c, 0.5 * gv);
                        add(r - 1, c, -0.5 * gv);
                    }
                } else {
                    if (r < R - 1) {
                        add(r + 1, c, gv);
                        add(r, c, -gv);
                    } else {
                        add(r, c, gv);
                        add(r - 1, c, -gv);
                    }
                }
            }
        }
    } else {
        for (int r = 0; r < R; ++r) {
            for (int c = 0; c < C; ++c) {
                const double gv = g.at(r, c);
                if (gv == 0.0) continue;
                if (stencil == DerivativeStencil::Central) {
                    if (c == 0) {
                        add(r, 1, gv);
                        add(r, 0, -gv);
                    } else if (c == C - 1) {
                        add(r, C - 1, gv);
                        add(r, C - 2, -gv);
                    } else {
                        add(r, c + 1, 0.5 * gv);
                        add(r, c - 1, -0.5 * gv);
                    }
                } else {
                    if (c < C - 1) {
                        add(r, c + 1, gv);
                        add(r, c, -gv);
                    } else {
                        add(r, c, gv);
                        add(r, c - 1, -gv);
                    }
                }
            }
        }
    }
}

StrainField strain_from_displacement(const DisplacementField& d, DerivativeStencil stencil) {
    if (!d.w1.same_shape(d.w2))
        throw std::invalid_argument("strain_from_displacement: w1/w2 shape mismatch");
    if (d.rows() < 3 || d.cols() < 3)
        throw std::invalid_argument("strain_from_displacement: raster smaller than 3x3");
    StrainField s;
    s.e11 = derivative(d.w1, 0, d.spacing_a, stencil);
    s.e12 = derivative(d.w1, 1, d.spacing_l, stencil);
    s.e21 = derivative(d.w2, 0, d.spacing_a, stencil);
    s.e22 = derivative(d.w2, 1, d.spacing_l, stencil);
    return s;
}

EprField epr(const StrainField& s, double floor) {
    if (floor <= 0.0) throw std::invalid_argument("epr: floor must be positive");
    const int R = s.rows(), C = s.cols();
    EprField f;
    f.ve = Raster(R, C);
    f.valid = Mask(R, C);
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            const double e11 = s.e11.at(r, c);
            if (std::abs(e11) >= floor) {
                f.ve.at(r, c) = -s.e22.at(r, c) / e11;
                f.valid.at(r, c) = 1;
            }
        }
    }
    return f;
}

EprMask epr_mask(const EprField& v, const EprRange& r) {
    const int R = v.ve.rows(), C = v.ve.cols();
    EprMask out;
    out.m = Mask(R, C, 1);
    for (int i = 0; i < R; ++i) {
        for (int j = 0; j < C; ++j) {
            if (!v.valid.at(i, j)) continue;
            const double ve = v.ve.at(i, j);
            if (r.ve_min < ve && ve < r.ve_max) out.m.at(i, j) = 0;
        }
    }
    return out;
}

double mean_epr_in_range(const EprField& v, const EprMask& m) {
    double sum = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < v.ve.size(); ++i) {
        if (!m.m[i]) {
            sum += v.ve[i];
            ++n;
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : kEprFallbackMean;
}

Raster uniaxial_lateral_strain(const Raster& e11, double v) {
    if (v <= 0.0 || v >= 1.0)
        throw std::invalid_argument("uniaxial_lateral_strain: v out of (0,1)");
    Raster out(e11.rows(), e11.cols());
    for (size_t i = 0; i < e11.size(); ++i) out[i] = -v * e11[i];
    return out;
}

}  // namespace picture
