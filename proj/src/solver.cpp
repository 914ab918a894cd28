#include "picture/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace picture {

void SolverConfig::validate(int rows, int cols) const {
    if (pyramid_levels < 1) throw std::invalid_argument("SolverConfig: pyramid_levels < 1");
    const int mind = std::min(rows, cols);
    int log2d = 0;
    for (int d = mind; d > 1; d /= 2) ++log2d;
    const int maxlev = std::max(1, log2d - 3);
    if (pyramid_levels > maxlev)
        throw std::invalid_argument("SolverConfig: too many pyramid levels for frame size");
    if (iterations_per_level < 1)
        throw std::invalid_argument("SolverConfig: iterations_per_level < 1");
    if (!(step_size > 0.0)) throw std::invalid_argument("SolverConfig: step_size <= 0");
    if (!(convergence_tol > 0.0)) throw std::invalid_argument("SolverConfig: tol <= 0");
    weights.validate();
}

namespace {

// 5-tap binomial blur, reflecting at borders.
Raster binomial_blur(const Raster& x) {
    static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
    const int R = x.rows(), C = x.cols();
    auto reflect = [](int i, int n) {
        if (i < 0) return -i;
        if (i >= n) return 2 * n - 2 - i;
        return i;
    };
    Raster tmp(R, C);
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) {
            double s = 0.0;
            for (int t = -2; t <= 2; ++t) s += k[t + 2] * x.at(r, reflect(c + t, C));
            tmp.at(r, c) = s;
        }
    Raster blur(R, C);
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) {
            double s = 0.0;
            for (int t = -2; t <= 2; ++t) s += k[t + 2] * tmp.at(reflect(r + t, R), c);
            blur.at(r, c) = s;
        }
    return blur;
}

// binomial blur + factor-2 decimation
Raster downsample2(const Raster& x) {
    Raster blur = binomial_blur(x);
    const int R = x.rows(), C = x.cols();
    const int R2 = (R + 1) / 2, C2 = (C + 1) / 2;
    Raster out(R2, C2);
    for (int r = 0; r < R2; ++r)
        for (int c = 0; c < C2; ++c) out.at(r, c) = blur.at(2 * r, 2 * c);
    return out;
}

MultiChannelFrame downsample2(const MultiChannelFrame& f) {
    MultiChannelFrame out;
    out.ch_rf = downsample2(f.ch_rf);
    out.ch_imag = downsample2(f.ch_imag);
    out.ch_env = downsample2(f.ch_env);
    out.norm_scale = f.norm_scale;
    return out;
}

Raster upsample2_to(const Raster& x, int R, int C, double scale) {
    Raster out(R, C);
    const int r2 = x.rows(), c2 = x.cols();
    for (int r = 0; r < R; ++r) {
        const double sr = std::min(static_cast<double>(r2 - 1), r * 0.5);
        const int r0 = std::min(static_cast<int>(sr), r2 - 2 >= 0 ? r2 - 2 : 0);
        const double fr = sr - r0;
        for (int c = 0; c < C; ++c) {
            const double sc = std::min(static_cast<double>(c2 - 1), c * 0.5);
            const int c0 = std::min(static_cast<int>(sc), c2 - 2 >= 0 ? c2 - 2 : 0);
            const double fc = sc - c0;
            const int r1 = std::min(r0 + 1, r2 - 1), c1 = std::min(c0 + 1, c2 - 1);
            out.at(r, c) = scale * ((1 - fr) * ((1 - fc) * x.at(r0, c0) + fc * x.at(r0, c1)) +
                                    fr * ((1 - fc) * x.at(r1, c0) + fc * x.at(r1, c1)));
        }
    }
    return out;
}

Raster decimate_to_level(const Raster& x, int level) {
    const int f = 1 << level;
    const int R = (x.rows() + f - 1) / f, C = (x.cols() + f - 1) / f;
    Raster out(R, C);
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c)
            out.at(r, c) = x.at(std::min(r * f, x.rows() - 1), std::min(c * f, x.cols() - 1)) /
                           static_cast<double>(f);
    return out;
}

double median_of(std::vector<double>& v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

}  // namespace

DisplacementField axial_seed(const RfFrame& i1, const RfFrame& i2) {
    if (!i1.samples.same_shape(i2.samples))
        throw std::invalid_argument("axial_seed: frame shape mismatch");
    const int R = i1.samples.rows(), C = i1.samples.cols();
    const int block = std::max(8, std::min(16, std::min(R, C) / 4));
    const int maxlag = std::max(2, std::min(R / 4, 32));
    const int nbr = std::max(1, R / block), nbc = std::max(1, C / block);

    Raster lags(nbr, nbc);
    for (int br = 0; br < nbr; ++br) {
        for (int bc = 0; bc < nbc; ++bc) {
            const int r0 = br * block, r1 = std::min(R, r0 + block);
            const int c0 = bc * block, c1 = std::min(C, c0 + block);
            double best = -2.0;
            int best_lag = 0;
            for (int lag = -maxlag; lag <= maxlag; ++lag) {
                double num = 0.0, e1 = 0.0, e2 = 0.0;
                for (int r = r0; r < r1; ++r) {
                    const int rs = r + lag;
                    if (rs < 0 || rs >= R) continue;
                    for (int c = c0; c < c1; ++c) {
                        const double a = i1.samples.at(r, c), b = i2.samples.at(rs, c);
                        num += a * b;
                        e1 += a * a;
                        e2 += b * b;
                    }
                }
                if (e1 <= 0.0 || e2 <= 0.0) continue;
                const double ncc = num / std::sqrt(e1 * e2);
                if (ncc > best) {
                    best = ncc;
                    best_lag = lag;
                }
            }
            lags.at(br, bc) = best_lag;
        }
    }

    Raster filtered(nbr, nbc);
    for (int br = 0; br < nbr; ++br)
        for (int bc = 0; bc < nbc; ++bc) {
            std::vector<double> neigh;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const int r = br + dr, c = bc + dc;
                    if (r >= 0 && r < nbr && c >= 0 && c < nbc) neigh.push_back(lags.at(r, c));
                }
            filtered.at(br, bc) = median_of(neigh);
        }

    DisplacementField d;
    d.w1 = Raster(R, C);
    d.w2 = Raster(R, C);
    for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c)
            d.w1.at(r, c) = filtered.at(std::min(r / block, nbr - 1), std::min(c / block, nbc - 1));
    return d;
}

SolveReport solve(const RfFrame& i1, const RfFrame& i2, const SolverConfig& cfg) {
    if (!i1.samples.same_shape(i2.samples))
        throw std::invalid_argument("solve: frame shape mismatch");
    cfg.validate(i1.samples.rows(), i1.samples.cols());
    const auto t_start = std::chrono::steady_clock::now();

    std::vector<MultiChannelFrame> pyr1, pyr2;
    pyr1.push_back(build_channels(i1));
    pyr2.push_back(build_channels(i2));
    for (int l = 1; l < cfg.pyramid_levels; ++l) {
        pyr1.push_back(downsample2(pyr1.back()));
        pyr2.push_back(downsample2(pyr2.back()));
    }

    DisplacementField d;
    const int coarse = cfg.pyramid_levels - 1;
    if (cfg.init == InitMode::AxialSeed) {
        DisplacementField seed = axial_seed(i1, i2);
        // Smooth and slightly damp the blocky integer-lag seed. The raw
        // seed starts the descent exactly on warp-validity boundaries and
        // on zero-strain plateaus where every L1 term is at a kink; a
        // blurred, strictly interior seed makes the landscape locally
        // smooth around the start.
        for (int pass = 0; pass < 4; ++pass) seed.w1 = binomial_blur(seed.w1);
        for (size_t i = 0; i < seed.w1.size(); ++i) seed.w1[i] *= 1.0 - 1e-3;
        d.w1 = decimate_to_level(seed.w1, coarse);
        d.w2 = decimate_to_level(seed.w2, coarse);
    } else {
        d.w1 = Raster(pyr1[coarse].rows(), pyr1[coarse].cols());
        d.w2 = Raster(pyr1[coarse].rows(), pyr1[coarse].cols());
    }

    SolveReport report;
    bool converged = false;
    for (int level = coarse; level >= 0; --level) {
        const MultiChannelFrame& f1 = pyr1[level];
        const MultiChannelFrame& f2 = pyr2[level];
        if (d.rows() != f1.rows() || d.cols() != f1.cols()) {
            d.w1 = upsample2_to(d.w1, f1.rows(), f1.cols(), 2.0);
            d.w2 = upsample2_to(d.w2, f1.rows(), f1.cols(), 2.0);
        }
        // Penalty continuation: coarse levels and the first finest-level
        // phase run data + smoothness only. The EPR terms switch on in a
        // second finest-level phase, from a field whose strains are
        // already clean — engaging them from the raw seed strands the
        // line search on mask-flip discontinuities at strain outliers.
        const int phases = (level == 0 && cfg.weights.lambda_v != 0.0) ? 2 : 1;
        for (int phase = 0; phase < phases; ++phase) {
            LossWeights lw = cfg.weights;
            if (level > 0 || phase == 0) lw.lambda_v = 0.0;
            const size_t P = d.w1.size();
            Raster m1(d.rows(), d.cols()), v1(d.rows(), d.cols());
            Raster m2(d.rows(), d.cols()), v2(d.rows(), d.cols());
            double lr = cfg.step_size;
            double prev_total = total_loss(f1, f2, d, lw, cfg.epr_floor, cfg.stencil).total;
            const double initial_total = prev_total;
            converged = false;
            int stall = 0;

            for (int it = 0; it < cfg.iterations_per_level; ++it) {
                LossBreakdown b;
                Gradient g = loss_gradient(f1, f2, d, lw, cfg.epr_floor, cfg.stencil, &b);

                const double bc1 = 1.0 - std::pow(cfg.beta1, it + 1);
                const double bc2 = 1.0 - std::pow(cfg.beta2, it + 1);
                DisplacementField cand = d;
                for (size_t i = 0; i < P; ++i) {
                    m1[i] = cfg.beta1 * m1[i] + (1 - cfg.beta1) * g.w1[i];
                    v1[i] = cfg.beta2 * v1[i] + (1 - cfg.beta2) * g.w1[i] * g.w1[i];
                    m2[i] = cfg.beta1 * m2[i] + (1 - cfg.beta1) * g.w2[i];
                    v2[i] = cfg.beta2 * v2[i] + (1 - cfg.beta2) * g.w2[i] * g.w2[i];
                    cand.w1[i] -= lr * (m1[i] / bc1) / (std::sqrt(v1[i] / bc2) + cfg.adam_eps);
                    cand.w2[i] -= lr * (m2[i] / bc1) / (std::sqrt(v2[i] / bc2) + cfg.adam_eps);
                }
                LossBreakdown cb = total_loss(f1, f2, cand, lw, cfg.epr_floor, cfg.stencil);
                LossBreakdown accepted;
                const bool took_step = cb.total <= prev_total + 1e-12;
                if (took_step) {
                    d = std::move(cand);
                    accepted = cb;
                    // recover step size after successful backtracking
                    lr = std::min(lr * 1.2, cfg.step_size);
                } else {
                    lr = std::max(lr * 0.5, 1e-12);
                    accepted = b;  // step rejected, field unchanged
                    accepted.total = prev_total;
                }
                if (accepted.total > 10.0 * initial_total + 1e-12)
                    throw SolverDivergence("solve: loss exceeded 10x initial value");

                report.trace.push_back({level, it, accepted, lr});
                // convergence counts only accepted steps; rejections merely
                // shrink the step and retry
                if (took_step) {
                    const double rel = std::abs(prev_total - accepted.total) /
                                       std::max(std::abs(prev_total), 1e-30);
                    stall = rel < cfg.convergence_tol ? stall + 1 : 0;
                }
                prev_total = accepted.total;
                if (stall >= 10) {
                    converged = true;
                    break;
                }
            }
        }
    }

    report.field = d;
    report.converged = converged;
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

std::string trace_csv(const SolveReport& report) {
    std::ostringstream os;
    os << "iteration,level,data,s1,s2,vd,vs,total\n";
    os.precision(17);
    for (const auto& rec : report.trace)
        os << rec.iter << "," << rec.level << "," << rec.loss.data << "," << rec.loss.s1 << ","
           << rec.loss.s2 << "," << rec.loss.vd << "," << rec.loss.vs << "," << rec.loss.total
           << "\n";
    return os.str();
}

std::string SolverConfig::to_json() const {
    nlohmann::json j;
    j["pyramid_levels"] = pyramid_levels;
    j["iterations_per_level"] = iterations_per_level;
    j["step_size"] = step_size;
    j["adaptive_moments"] = {beta1, beta2, adam_eps};
    j["convergence_tol"] = convergence_tol;
    j["init"] = init == InitMode::Zero ? "zero" : "axial-seed";
    j["weights"] = nlohmann::json::parse(weights.to_json());
    j["seed"] = seed;
    j["stencil"] = stencil == DerivativeStencil::Central ? "central" : "forward";
    j["epr_floor"] = epr_floor;
    return j.dump(2);
}

SolverConfig SolverConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    SolverConfig c;
    c.pyramid_levels = j.value("pyramid_levels", c.pyramid_levels);
    c.iterations_per_level = j.value("iterations_per_level", c.iterations_per_level);
    c.step_size = j.value("step_size", c.step_size);
    if (j.contains("adaptive_moments")) {
        c.beta1 = j["adaptive_moments"].at(0).get<double>();
        c.beta2 = j["adaptive_moments"].at(1).get<double>();
        c.adam_eps = j["adaptive_moments"].at(2).get<double>();
    }
    c.convergence_tol = j.value("convergence_tol", c.convergence_tol);
    const std::string init = j.value("init", "axial-seed");
    if (init == "zero")
        c.init = InitMode::Zero;
    else if (init == "axial-seed")
        c.init = InitMode::AxialSeed;
    else
        throw std::invalid_argument("SolverConfig: unknown init mode " + init);
    if (j.contains("weights")) c.weights = LossWeights::from_json(j["weights"].dump());
    c.seed = j.value("seed", static_cast<uint64_t>(0));
    const std::string st = j.value("stencil", "central");
    if (st == "central")
        c.stencil = DerivativeStencil::Central;
    else if (st == "forward")
        c.stencil = DerivativeStencil::Forward;
    else
        throw std::invalid_argument("SolverConfig: unknown stencil " + st);
    c.epr_floor = j.value("epr_floor", c.epr_floor);
    return c;
}

}  // namespace picture
