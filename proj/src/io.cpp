#include "picture/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "raster format assumes a little-endian host");

namespace picture {

void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open for writing: " + tmp.string());
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_raster(const std::filesystem::path& base, const Raster& r, const RasterMeta& meta) {
    std::string payload(r.size() * 4, '\0');
    for (size_t i = 0; i < r.size(); ++i) {
        const float f = static_cast<float>(r[i]);
        std::memcpy(payload.data() + i * 4, &f, 4);
    }
    atomic_write(base.string() + ".f32", payload);

    nlohmann::json j;
    j["shape"] = {r.rows(), r.cols()};
    j["dtype"] = "f32";
    j["byte_order"] = "little";
    j["semantic"] = meta.semantic;
    j["spacing"] = {meta.spacing_a, meta.spacing_l};
    j["frequencies"] = {meta.sampling_freq, meta.center_freq};
    atomic_write(base.string() + ".json", j.dump(2) + "\n");
}

Raster read_raster(const std::filesystem::path& base, RasterMeta* meta) {
    nlohmann::json j = nlohmann::json::parse(read_file(base.string() + ".json"));
    const int rows = j.at("shape").at(0).get<int>();
    const int cols = j.at("shape").at(1).get<int>();
    if (j.value("dtype", "f32") != "f32" || j.value("byte_order", "little") != "little")
        throw std::runtime_error("unsupported raster encoding in " + base.string() + ".json");
    const std::string payload = read_file(base.string() + ".f32");
    if (payload.size() != static_cast<size_t>(rows) * cols * 4)
        throw std::runtime_error("payload length does not match sidecar shape: " + base.string());
    Raster r(rows, cols);
    for (size_t i = 0; i < r.size(); ++i) {
        float f;
        std::memcpy(&f, payload.data() + i * 4, 4);
        r[i] = f;
    }
    if (meta) {
        meta->semantic = j.value("semantic", "rf");
        if (j.contains("spacing")) {
            meta->spacing_a = j["spacing"].at(0).get<double>();
            meta->spacing_l = j["spacing"].at(1).get<double>();
        }
        if (j.contains("frequencies")) {
            meta->sampling_freq = j["frequencies"].at(0).get<double>();
            meta->center_freq = j["frequencies"].at(1).get<double>();
        }
    }
    return r;
}

std::string content_hash(const std::string& bytes) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_hash(const std::filesystem::path& path) { return content_hash(read_file(path)); }

void write_gray_image(const std::filesystem::path& path, const Raster& r, double lo, double hi) {
    if (!(hi > lo)) throw std::invalid_argument("write_gray_image: bad display bounds");
    std::ostringstream os;
    os << "P5\n" << r.cols() << " " << r.rows() << "\n255\n";
    std::string body = os.str();
    body.reserve(body.size() + r.size());
    const double scale = 255.0 / (hi - lo);
    for (size_t i = 0; i < r.size(); ++i) {
        int v = static_cast<int>((r[i] - lo) * scale + 0.5);
        body.push_back(static_cast<char>(std::clamp(v, 0, 255)));
    }
    atomic_write(path, body);
}

}  // namespace picture
