#include "picture/phantom.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace picture {

void PhantomSpec::validate() const {
    if (rows < 16 || cols < 16)
        throw std::invalid_argument("PhantomSpec: grid must be at least 16x16");
    if (std::abs(applied_strain) > 0.05)
        throw std::invalid_argument("PhantomSpec: |applied_strain| exceeds small-strain limit 0.05");
    if (scatterer_density <= 0.0)
        throw std::invalid_argument("PhantomSpec: scatterer density must be positive");
    if (!(sampling_freq > 2.0 * center_freq))
        throw std::invalid_argument("PhantomSpec: sampling below Nyquist");
    auto check_mat = [](const MaterialParams& m, const char* who) {
        if (m.youngs_modulus <= 0.0)
            throw std::invalid_argument(std::string("PhantomSpec: ") + who + " modulus <= 0");
        if (m.poisson_ratio < 0.2 || m.poisson_ratio > 0.5)
            throw std::invalid_argument(std::string("PhantomSpec: ") + who +
                                        " Poisson ratio outside [0.2, 0.5]");
    };
    check_mat(background, "background");
    for (const auto& inc : inclusions) {
        check_mat(inc.material, "inclusion");
        if (inc.radius <= 0.0) throw std::invalid_argument("PhantomSpec: inclusion radius <= 0");
        if (inc.center_a - inc.radius < 0.0 || inc.center_a + inc.radius > rows - 1 ||
            inc.center_l - inc.radius < 0.0 || inc.center_l + inc.radius > cols - 1)
            throw std::invalid_argument("PhantomSpec: inclusion extends outside the grid");
        if (inc.material.youngs_modulus < 2.0 * background.youngs_modulus)
            throw std::invalid_argument(
                "PhantomSpec: inclusion stiffness below 2x background");
        if (inc.decay_delta < 0.0)
            throw std::invalid_argument("PhantomSpec: negative decay length");
    }
}

GroundTruth ground_truth_displacement(const PhantomSpec& spec) {
    spec.validate();
    const int R = spec.rows, C = spec.cols;

    Raster e11(R, C), e22(R, C);
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            double factor = 1.0;
            double v_local = spec.background.poisson_ratio;
            for (const auto& inc : spec.inclusions) {
                const double dist =
                    std::hypot(r - inc.center_a, c - inc.center_l);
                const double ratio =
                    spec.background.youngs_modulus / inc.material.youngs_modulus;
                if (dist <= inc.radius) {
                    factor += ratio - 1.0;
                    v_local = inc.material.poisson_ratio;
                } else {
                    const double d = dist - inc.radius;
                    const double g =
                        inc.decay_delta > 1e-12 ? std::exp(-d / inc.decay_delta) : 0.0;
                    factor += (ratio - 1.0) * g;
                }
            }
            e11.at(r, c) = spec.applied_strain * factor;
            e22.at(r, c) = -v_local * e11.at(r, c);
        }
    }

    GroundTruth gt;
    gt.strain.e11 = e11;
    gt.strain.e22 = e22;
    gt.strain.e12 = Raster(R, C);
    gt.strain.e21 = Raster(R, C);

    // Trapezoidal integration: axial from the transducer face, lateral
    // from the centerline outward.
    gt.displacement.w1 = Raster(R, C);
    gt.displacement.w2 = Raster(R, C);
    for (int c = 0; c < C; ++c)
        for (int r = 1; r < R; ++r)
            gt.displacement.w1.at(r, c) =
                gt.displacement.w1.at(r - 1, c) + 0.5 * (e11.at(r - 1, c) + e11.at(r, c));
    const int c0 = C / 2;
    for (int r = 0; r < R; ++r) {
        for (int c = c0 + 1; c < C; ++c)
            gt.displacement.w2.at(r, c) =
                gt.displacement.w2.at(r, c - 1) + 0.5 * (e22.at(r, c - 1) + e22.at(r, c));
        for (int c = c0 - 1; c >= 0; --c)
            gt.displacement.w2.at(r, c) =
                gt.displacement.w2.at(r, c + 1) - 0.5 * (e22.at(r, c) + e22.at(r, c + 1));
    }

    gt.epr_true = epr(gt.strain);
    return gt;
}

ScattererField make_scatterers(const PhantomSpec& spec) {
    spec.validate();
    const auto count = static_cast<size_t>(
        std::llround(spec.scatterer_density * static_cast<double>(spec.rows) * spec.cols));
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> ua(0.0, static_cast<double>(spec.rows));
    std::uniform_real_distribution<double> ul(0.0, static_cast<double>(spec.cols));
    std::normal_distribution<double> amp(0.0, 1.0);
    ScattererField f;
    f.pos_a.reserve(count);
    f.pos_l.reserve(count);
    f.amp.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        f.pos_a.push_back(ua(rng));
        f.pos_l.push_back(ul(rng));
        f.amp.push_back(amp(rng));
    }
    return f;
}

RfFrame render_rf(const ScattererField& sc, const PsfSpec& psf, int rows, int cols) {
    if (!(psf.sampling_freq > 2.0 * psf.center_freq))
        throw std::invalid_argument("render_rf: carrier not resolvable at sampling frequency");
    const double wavelength_px = psf.sampling_freq / psf.center_freq;
    const double sigma_a = psf.axial_sigma_wavelengths * wavelength_px;
    const double sigma_l = psf.lateral_sigma_px;
    const double omega = 2.0 * std::numbers::pi * psf.center_freq / psf.sampling_freq;
    const int ha = static_cast<int>(std::ceil(3.0 * sigma_a));
    const int hl = static_cast<int>(std::ceil(3.0 * sigma_l));

    RfFrame frame;
    frame.samples = Raster(rows, cols);
    frame.sampling_freq = psf.sampling_freq;
    frame.center_freq = psf.center_freq;
    for (size_t i = 0; i < sc.size(); ++i) {
        const double pa = sc.pos_a[i], pl = sc.pos_l[i], a = sc.amp[i];
        const int r0 = std::max(0, static_cast<int>(std::floor(pa)) - ha);
        const int r1 = std::min(rows - 1, static_cast<int>(std::ceil(pa)) + ha);
        const int cl0 = std::max(0, static_cast<int>(std::floor(pl)) - hl);
        const int cl1 = std::min(cols - 1, static_cast<int>(std::ceil(pl)) + hl);
        for (int r = r0; r <= r1; ++r) {
            const double da = r - pa;
            const double env_a = std::exp(-0.5 * da * da / (sigma_a * sigma_a));
            const double carrier = std::cos(omega * da);
            for (int c = cl0; c <= cl1; ++c) {
                const double dl = c - pl;
                const double env_l = std::exp(-0.5 * dl * dl / (sigma_l * sigma_l));
                frame.samples.at(r, c) += a * env_a * env_l * carrier;
            }
        }
    }
    return frame;
}

namespace {

double bilinear_clamped(const Raster& x, double r, double c) {
    const int R = x.rows(), C = x.cols();
    r = std::clamp(r, 0.0, static_cast<double>(R - 1));
    c = std::clamp(c, 0.0, static_cast<double>(C - 1));
    const int r0 = std::min(static_cast<int>(r), R - 2);
    const int c0 = std::min(static_cast<int>(c), C - 2);
    const double fr = r - r0, fc = c - c0;
    return (1 - fr) * (1 - fc) * x.at(r0, c0) + (1 - fr) * fc * x.at(r0, c0 + 1) +
           fr * (1 - fc) * x.at(r0 + 1, c0) + fr * fc * x.at(r0 + 1, c0 + 1);
}

}  // namespace

FramePair make_pair(const PhantomSpec& spec) {
    FramePair out;
    out.gt = ground_truth_displacement(spec);
    const ScattererField rest = make_scatterers(spec);

    PsfSpec psf;
    psf.sampling_freq = spec.sampling_freq;
    psf.center_freq = spec.center_freq;
    out.i1 = render_rf(rest, psf, spec.rows, spec.cols);

    ScattererField moved = rest;
    for (size_t i = 0; i < rest.size(); ++i) {
        moved.pos_a[i] += bilinear_clamped(out.gt.displacement.w1, rest.pos_a[i], rest.pos_l[i]);
        moved.pos_l[i] += bilinear_clamped(out.gt.displacement.w2, rest.pos_a[i], rest.pos_l[i]);
    }
    out.i2 = render_rf(moved, psf, spec.rows, spec.cols);
    return out;
}

std::string PhantomSpec::to_json() const {
    nlohmann::json j;
    j["shape"] = {rows, cols};
    j["background"] = {{"youngs_modulus", background.youngs_modulus},
                       {"poisson_ratio", background.poisson_ratio}};
    j["inclusions"] = nlohmann::json::array();
    for (const auto& inc : inclusions) {
        j["inclusions"].push_back(
            {{"center", {inc.center_a, inc.center_l}},
             {"radius", inc.radius},
             {"material",
              {{"youngs_modulus", inc.material.youngs_modulus},
               {"poisson_ratio", inc.material.poisson_ratio}}},
             {"decay_delta", inc.decay_delta}});
    }
    j["applied_strain"] = applied_strain;
    j["scatterer_density"] = scatterer_density;
    j["seed"] = seed;
    j["sampling_freq"] = sampling_freq;
    j["center_freq"] = center_freq;
    return j.dump(2);
}

PhantomSpec PhantomSpec::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    PhantomSpec s;
    s.rows = j.at("shape").at(0).get<int>();
    s.cols = j.at("shape").at(1).get<int>();
    if (j.contains("background")) {
        s.background.youngs_modulus = j["background"].value("youngs_modulus", 20.0);
        s.background.poisson_ratio = j["background"].value("poisson_ratio", 0.49);
    }
    for (const auto& ji : j.value("inclusions", nlohmann::json::array())) {
        Inclusion inc;
        inc.center_a = ji.at("center").at(0).get<double>();
        inc.center_l = ji.at("center").at(1).get<double>();
        inc.radius = ji.at("radius").get<double>();
        inc.material.youngs_modulus = ji.at("material").value("youngs_modulus", 40.0);
        inc.material.poisson_ratio = ji.at("material").value("poisson_ratio", 0.49);
        inc.decay_delta = ji.value("decay_delta", 4.0);
        s.inclusions.push_back(inc);
    }
    s.applied_strain = j.value("applied_strain", -0.01);
    s.scatterer_density = j.value("scatterer_density", 2.0);
    s.seed = j.value("seed", static_cast<uint64_t>(0));
    s.sampling_freq = j.value("sampling_freq", 40.0);
    s.center_freq = j.value("center_freq", 8.0);
    return s;
}

}  // namespace picture
