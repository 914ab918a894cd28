#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "picture/io.hpp"
#include "picture/metrics.hpp"
#include "picture/phantom.hpp"
#include "picture/solver.hpp"

namespace fs = std::filesystem;
using namespace picture;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

// Strips a trailing .f32/.json so paths with or without extension work.
fs::path raster_base(const fs::path& p) {
    if (p.extension() == ".f32" || p.extension() == ".json") {
        fs::path q = p;
        q.replace_extension();
        return q;
    }
    return p;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir,
              std::optional<uint64_t> seed) {
    PhantomSpec spec = PhantomSpec::from_json(read_file(spec_path));
    if (seed) spec.seed = *seed;
    spec.validate();
    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    const FramePair pair = make_pair(spec);
    RasterMeta rf{"rf", 1.0, 1.0, spec.sampling_freq, spec.center_freq};
    write_raster(out / "i1", pair.i1.samples, rf);
    write_raster(out / "i2", pair.i2.samples, rf);
    write_raster(out / "gt_w1", pair.gt.displacement.w1, {"disp_axial"});
    write_raster(out / "gt_w2", pair.gt.displacement.w2, {"disp_lateral"});
    write_raster(out / "gt_e11", pair.gt.strain.e11, {"strain"});
    write_raster(out / "gt_e22", pair.gt.strain.e22, {"strain"});
    write_raster(out / "gt_epr", pair.gt.epr_true.ve, {"epr"});

    nlohmann::json manifest;
    manifest["spec"] = nlohmann::json::parse(spec.to_json());
    manifest["outputs"] = nlohmann::json::object();
    for (const char* name : {"i1", "i2", "gt_w1", "gt_w2", "gt_e11", "gt_e22", "gt_epr"})
        manifest["outputs"][name] = file_hash(out / (std::string(name) + ".f32"));
    atomic_write(out / "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

int cmd_solve(const std::string& i1_path, const std::string& i2_path,
              const std::string& config_path, const std::string& out_dir,
              std::optional<double> lambda_v, std::optional<double> lambda_s,
              std::optional<int> levels) {
    SolverConfig cfg = config_path.empty() ? SolverConfig{}
                                           : SolverConfig::from_json(read_file(config_path));
    if (lambda_v) cfg.weights.lambda_v = *lambda_v;
    if (lambda_s) cfg.weights.lambda_s = *lambda_s;
    if (levels) cfg.pyramid_levels = *levels;

    RasterMeta meta1, meta2;
    RfFrame i1, i2;
    i1.samples = read_raster(raster_base(i1_path), &meta1);
    i2.samples = read_raster(raster_base(i2_path), &meta2);
    if (meta1.sampling_freq > 0) i1.sampling_freq = meta1.sampling_freq;
    if (meta1.center_freq > 0) i1.center_freq = meta1.center_freq;
    if (meta2.sampling_freq > 0) i2.sampling_freq = meta2.sampling_freq;
    if (meta2.center_freq > 0) i2.center_freq = meta2.center_freq;

    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    SolveReport report;
    try {
        report = solve(i1, i2, cfg);
    } catch (const SolverDivergence& e) {
        atomic_write(out / "trace.csv", "diverged\n");
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }

    const StrainField s = strain_from_displacement(report.field, cfg.stencil);
    const EprField ve = epr(s, cfg.epr_floor);
    write_raster(out / "w1", report.field.w1, {"disp_axial"});
    write_raster(out / "w2", report.field.w2, {"disp_lateral"});
    write_raster(out / "e11", s.e11, {"strain"});
    write_raster(out / "e22", s.e22, {"strain"});
    write_raster(out / "epr", ve.ve, {"epr"});
    atomic_write(out / "trace.csv", trace_csv(report));

    nlohmann::json manifest;
    manifest["config"] = nlohmann::json::parse(cfg.to_json());
    manifest["inputs"] = {{"i1", content_hash(read_file(raster_base(i1_path).string() + ".f32"))},
                          {"i2", content_hash(read_file(raster_base(i2_path).string() + ".f32"))}};
    manifest["converged"] = report.converged;
    manifest["wall_time_s"] = report.wall_time_s;
    manifest["final_total"] = report.trace.empty() ? 0.0 : report.trace.back().loss.total;
    atomic_write(out / "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

int cmd_eval(const std::string& est_dir, const std::string& truth_dir,
             const std::string& windows_path, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const fs::path est(est_dir), out(out_dir);

    std::ostringstream csv;
    csv << "method,field,metric,mean,std,n_patches\n";
    csv.precision(12);

    nlohmann::json manifest;
    manifest["images"] = nlohmann::json::object();

    const struct {
        const char* name;
        double lo, hi;
    } fields[] = {{"e11", -0.02, 0.0}, {"e22", 0.0, 0.01}, {"epr", 0.0, 1.0}};

    for (const auto& f : fields) {
        const fs::path est_base = est / f.name;
        if (!fs::exists(est_base.string() + ".f32")) continue;
        const Raster r = read_raster(est_base);

        write_gray_image(out / (std::string(f.name) + ".pgm"), r, f.lo, f.hi);
        manifest["images"][f.name] = {{"lo", f.lo}, {"hi", f.hi}};

        if (!truth_dir.empty()) {
            fs::path truth_base = fs::path(truth_dir) / (std::string("gt_") + f.name);
            if (!fs::exists(truth_base.string() + ".f32"))
                truth_base = fs::path(truth_dir) / f.name;
            const Raster t = read_raster(truth_base);
            csv << "estimate," << f.name << ",rmse," << rmse_field(r, t, 2) << ",0,0\n";
        }

        if (!windows_path.empty()) {
            const WindowSpec w = WindowSpec::from_json(read_file(windows_path));
            const MetricResult c = cnr(r, w);
            const MetricResult srr = sr(r, w);
            csv << "estimate," << f.name << ",cnr," << c.mean << "," << c.stddev << ","
                << c.n_patches << "\n";
            csv << "estimate," << f.name << ",sr," << srr.mean << "," << srr.stddev << ","
                << srr.n_patches << "\n";
        }
    }

    atomic_write(out / "metrics.csv", csv.str());
    atomic_write(out / "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PICTURE elastography: synthetic phantoms, variational solve, evaluation"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "generate a synthetic pre/post frame pair");
    std::string spec_path, out_dir;
    std::optional<uint64_t> seed;
    synth->add_option("--spec", spec_path, "phantom spec JSON")->required();
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--seed", seed, "override the spec RNG seed");

    auto* solve_cmd = app.add_subcommand("solve", "recover the displacement field");
    std::string i1_path, i2_path, config_path, solve_out;
    std::optional<double> lambda_v, lambda_s;
    std::optional<int> levels;
    solve_cmd->add_option("--i1", i1_path, "pre-compression raster (.f32)")->required();
    solve_cmd->add_option("--i2", i2_path, "post-compression raster (.f32)")->required();
    solve_cmd->add_option("--config", config_path, "solver config JSON");
    solve_cmd->add_option("--out", solve_out, "output directory")->required();
    solve_cmd->add_option("--lambda-v", lambda_v, "override PICTURE weight");
    solve_cmd->add_option("--lambda-s", lambda_s, "override smoothness weight");
    solve_cmd->add_option("--levels", levels, "override pyramid levels");

    auto* eval_cmd = app.add_subcommand("eval", "metrics and image renders");
    std::string est_dir, truth_dir, windows_path, eval_out;
    eval_cmd->add_option("--est", est_dir, "estimate directory")->required();
    eval_cmd->add_option("--truth", truth_dir, "ground-truth directory");
    eval_cmd->add_option("--windows", windows_path, "CNR/SR window spec JSON");
    eval_cmd->add_option("--out", eval_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(spec_path, out_dir, seed);
        if (solve_cmd->parsed())
            return cmd_solve(i1_path, i2_path, config_path, solve_out, lambda_v, lambda_s,
                             levels);
        if (eval_cmd->parsed()) return cmd_eval(est_dir, truth_dir, windows_path, eval_out);
    } catch (const SolverDivergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return 0;
}
