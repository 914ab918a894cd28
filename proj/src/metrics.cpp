#include "picture/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace picture {

namespace {

struct PatchStats {
    double mean, var;
};

std::vector<PatchStats> patch_stats(const Raster& x, const Rect& rect, int size, int stride) {
    std::vector<PatchStats> out;
    for (int r = rect.row; r + size <= rect.row + rect.height; r += stride) {
        for (int c = rect.col; c + size <= rect.col + rect.width; c += stride) {
            double sum = 0.0, sq = 0.0;
            const double n = static_cast<double>(size) * size;
            for (int i = 0; i < size; ++i)
                for (int j = 0; j < size; ++j) {
                    const double v = x.at(r + i, c + j);
                    sum += v;
                    sq += v * v;
                }
            const double mean = sum / n;
            out.push_back({mean, std::max(0.0, sq / n - mean * mean)});
        }
    }
    return out;
}

MetricResult summarize(const std::vector<double>& vals) {
    MetricResult res;
    res.n_patches = static_cast<int>(vals.size());
    double sum = 0.0;
    for (double v : vals) sum += v;
    res.mean = sum / static_cast<double>(vals.size());
    double sq = 0.0;
    for (double v : vals) sq += (v - res.mean) * (v - res.mean);
    res.stddev = std::sqrt(sq / static_cast<double>(vals.size()));
    return res;
}

}  // namespace

void WindowSpec::validate(int rows, int cols) const {
    auto check = [&](const Rect& r, const char* who) {
        if (r.height < 1 || r.width < 1)
            throw std::invalid_argument(std::string("WindowSpec: empty ") + who);
        if (r.row < 2 || r.col < 2 || r.row + r.height > rows - 2 || r.col + r.width > cols - 2)
            throw std::invalid_argument(std::string("WindowSpec: ") + who +
                                        " window too close to the border");
        const int nr = (r.height - patch_size) / patch_stride + 1;
        const int nc = (r.width - patch_size) / patch_stride + 1;
        if (r.height < patch_size || r.width < patch_size || nr * nc < 4)
            throw std::invalid_argument(std::string("WindowSpec: ") + who +
                                        " admits fewer than 4 patches");
    };
    if (patch_size < 2 || patch_stride < 1)
        throw std::invalid_argument("WindowSpec: bad patch size/stride");
    check(target, "target");
    check(background, "background");
}

MetricResult cnr(const Raster& strain, const WindowSpec& w) {
    w.validate(strain.rows(), strain.cols());
    const auto pt = patch_stats(strain, w.target, w.patch_size, w.patch_stride);
    const auto pb = patch_stats(strain, w.background, w.patch_size, w.patch_stride);
    const size_t n = std::max(pt.size(), pb.size());
    std::vector<double> vals;
    for (size_t i = 0; i < n; ++i) {
        const PatchStats& t = pt[i % pt.size()];
        const PatchStats& b = pb[i % pb.size()];
        const double denom = b.var + t.var;
        if (denom <= 0.0) continue;
        const double d = b.mean - t.mean;
        vals.push_back(std::sqrt(2.0 * d * d / denom));
    }
    if (vals.empty()) throw std::runtime_error("cnr: every patch pair degenerate");
    return summarize(vals);
}

MetricResult sr(const Raster& strain, const WindowSpec& w) {
    w.validate(strain.rows(), strain.cols());
    const auto pt = patch_stats(strain, w.target, w.patch_size, w.patch_stride);
    const auto pb = patch_stats(strain, w.background, w.patch_size, w.patch_stride);
    const size_t n = std::max(pt.size(), pb.size());
    std::vector<double> vals;
    for (size_t i = 0; i < n; ++i) {
        const PatchStats& t = pt[i % pt.size()];
        const PatchStats& b = pb[i % pb.size()];
        if (std::abs(b.mean) <= 1e-9) continue;
        vals.push_back(t.mean / b.mean);
    }
    if (vals.empty()) throw std::runtime_error("sr: every background patch mean near zero");
    return summarize(vals);
}

double rmse_field(const Raster& estimate, const Raster& truth, int margin) {
    if (!estimate.same_shape(truth)) throw std::invalid_argument("rmse_field: shape mismatch");
    if (margin < 2) throw std::invalid_argument("rmse_field: margin must be >= 2");
    const int R = estimate.rows(), C = estimate.cols();
    if (R - 2 * margin <= 0 || C - 2 * margin <= 0)
        throw std::invalid_argument("rmse_field: margin leaves no interior");
    double sq = 0.0;
    size_t n = 0;
    for (int r = margin; r < R - margin; ++r)
        for (int c = margin; c < C - margin; ++c) {
            const double d = estimate.at(r, c) - truth.at(r, c);
            sq += d * d;
            ++n;
        }
    return std::sqrt(sq / static_cast<double>(n));
}

Histogram epr_histogram(const EprField& v, int bins, double lo, double hi) {
    if (bins < 2) throw std::invalid_argument("epr_histogram: bins must be >= 2");
    if (!(lo < hi)) throw std::invalid_argument("epr_histogram: bad range");
    Histogram h;
    h.counts.assign(bins, 0);
    h.lo = lo;
    h.hi = hi;
    const double scale = bins / (hi - lo);
    for (size_t i = 0; i < v.ve.size(); ++i) {
        if (!v.valid[i]) continue;
        const double x = v.ve[i];
        if (x < lo)
            ++h.under;
        else if (x >= hi)
            ++h.over;
        else
            ++h.counts[std::min(bins - 1, static_cast<int>((x - lo) * scale))];
    }
    return h;
}

std::string WindowSpec::to_json() const {
    auto rect = [](const Rect& r) {
        return nlohmann::json{
            {"row", r.row}, {"col", r.col}, {"height", r.height}, {"width", r.width}};
    };
    nlohmann::json j;
    j["target"] = rect(target);
    j["background"] = rect(background);
    j["patch_size"] = patch_size;
    j["patch_stride"] = patch_stride;
    return j.dump(2);
}

WindowSpec WindowSpec::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    auto rect = [](const nlohmann::json& r) {
        return Rect{r.at("row").get<int>(), r.at("col").get<int>(), r.at("height").get<int>(),
                    r.at("width").get<int>()};
    };
    WindowSpec w;
    w.target = rect(j.at("target"));
    w.background = rect(j.at("background"));
    w.patch_size = j.value("patch_size", 8);
    w.patch_stride = j.value("patch_stride", 4);
    return w;
}

}  // namespace picture
