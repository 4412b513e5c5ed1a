#include "sgsplat/convert.hpp"
#include "sgsplat/metrics.hpp"
#include "sgsplat/synth.hpp"
#include "sgsplat/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace sgsplat;

namespace {

struct RenderFlags {
    int tile_size = 16;
    std::vector<double> thresholds = {2.0, 8.0};
    int model_override = -1;
    std::vector<double> background;
    int threads = 0;
    std::uint64_t seed = 0;
};

void add_render_flags(CLI::App* cmd, RenderFlags& flags) {
    cmd->add_option("--tile-size", flags.tile_size, "Tile edge in pixels")->check(CLI::PositiveNumber);
    cmd->add_option("--thresholds", flags.thresholds,
                    "Footprint thresholds t0,t1 (px) for adaptive SH degree")
        ->delimiter(',')
        ->expected(2);
    cmd->add_option("--model-override", flags.model_override,
                    "Force a fixed SH degree (0-2) for mixed scenes");
    cmd->add_option("--background", flags.background, "Background color r,g,b")
        ->delimiter(',')
        ->expected(3);
    cmd->add_option("--threads", flags.threads, "Worker threads (0 = hardware)");
    cmd->add_option("--seed", flags.seed, "Random seed");
}

RenderConfig to_config(const RenderFlags& flags) {
    RenderConfig cfg;
    cfg.tile_size = flags.tile_size;
    cfg.degree_threshold_lo = flags.thresholds[0];
    cfg.degree_threshold_hi = flags.thresholds[1];
    if (flags.model_override >= 0) cfg.sh_degree_override = flags.model_override;
    cfg.threads = flags.threads;
    return cfg;
}

void apply_background(Scene& scene, const RenderFlags& flags) {
    if (!flags.background.empty())
        scene.background = Vec3(flags.background[0], flags.background[1], flags.background[2]);
}

struct ViewFile {
    Camera cam;
    std::string image_path;
};

std::vector<ViewFile> discover_views(const std::string& dir) {
    std::vector<std::string> jsons;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".json") jsons.push_back(entry.path().string());
    std::sort(jsons.begin(), jsons.end());
    std::vector<ViewFile> views;
    for (const auto& path : jsons) {
        ViewFile v;
        v.cam = load_camera_json(path);
        fs::path stem = fs::path(path).parent_path() / fs::path(path).stem();
        if (fs::exists(stem.string() + ".fimg")) v.image_path = stem.string() + ".fimg";
        else if (fs::exists(stem.string() + ".png")) v.image_path = stem.string() + ".png";
        views.push_back(std::move(v));
    }
    if (views.empty()) throw IoError("no camera json files found in " + dir);
    return views;
}

Image load_target(const std::string& path) {
    if (path.empty()) throw IoError("view has no target image");
    if (fs::path(path).extension() == ".fimg") return load_float_image(path);
    return load_png(path);
}

int cmd_render(const std::string& scene_path, const std::string& camera_path,
               const std::string& out_path, const std::string& float_dump,
               const RenderFlags& flags) {
    Scene scene = load_ply(scene_path);
    apply_background(scene, flags);
    Camera cam = load_camera_json(camera_path);
    RenderResult result = render(scene, cam, to_config(flags));
    save_png(result.image.clamped01(), out_path);
    if (!float_dump.empty()) save_float_image(result.image, float_dump);
    std::cout << "rendered " << scene.gaussians.size() << " gaussians to " << out_path << " ("
              << cam.width << "x" << cam.height << ")\n";
    return 0;
}

TrainConfig load_train_config(const std::string& path, std::string* init_ply) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("config parse error: ") + e.what());
    }
    TrainConfig cfg;
    cfg.total_iterations = j.value("iterations", cfg.total_iterations);
    cfg.sg_start_iteration = j.value("sg_start_iteration", cfg.sg_start_iteration);
    cfg.sg_learning_rate = j.value("sg_learning_rate", cfg.sg_learning_rate);
    cfg.position_lr = j.value("position_lr", cfg.position_lr);
    cfg.position_lr_final = j.value("position_lr_final", cfg.position_lr);
    cfg.rotation_lr = j.value("rotation_lr", cfg.rotation_lr);
    cfg.scale_lr = j.value("scale_lr", cfg.scale_lr);
    cfg.opacity_lr = j.value("opacity_lr", cfg.opacity_lr);
    cfg.diffuse_lr = j.value("diffuse_lr", cfg.diffuse_lr);
    cfg.sh_lr = j.value("sh_lr", cfg.sh_lr);
    cfg.lambda_dssim = j.value("lambda_dssim", cfg.lambda_dssim);
    cfg.prune_every = j.value("prune_every", cfg.prune_every);
    cfg.prune_opacity_floor = j.value("prune_opacity_floor", cfg.prune_opacity_floor);
    cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.render.tile_size = j.value("tile_size", cfg.render.tile_size);
    if (j.contains("thresholds")) {
        cfg.render.degree_threshold_lo = j["thresholds"].at(0).get<double>();
        cfg.render.degree_threshold_hi = j["thresholds"].at(1).get<double>();
    }
    if (init_ply) *init_ply = j.value("init_ply", std::string());
    return cfg;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, int threads) {
    std::string init_ply;
    TrainConfig cfg = load_train_config(config_path, &init_ply);
    cfg.render.threads = threads;
    if (init_ply.empty()) init_ply = (fs::path(data_dir) / "init.ply").string();
    Scene scene = load_ply(init_ply);

    std::vector<TrainView> views;
    for (const auto& vf : discover_views(data_dir))
        views.emplace_back(vf.cam, load_target(vf.image_path));

    fs::create_directories(out_dir);
    cfg.checkpoint_dir = out_dir;
    cfg.snapshot_path = (fs::path(out_dir) / "diagnostic.ply").string();

    TrainResult result = train(scene, views, cfg);

    save_ply(result.scene, (fs::path(out_dir) / "final.ply").string(), detect_layout(result.scene));
    std::ofstream csv(fs::path(out_dir) / "loss.csv");
    csv << "iteration,loss\n";
    for (std::size_t i = 0; i < result.loss_history.size(); ++i)
        csv << (i + 1) << "," << result.loss_history[i] << "\n";
    std::cout << "trained " << cfg.total_iterations << " iterations; final loss "
              << (result.loss_history.empty() ? 0.0 : result.loss_history.back()) << "\n";
    return 0;
}

int cmd_convert(const std::string& in_path, const std::string& out_path, const std::string& target,
                const std::string& report, int samples, int iters, std::uint64_t seed,
                const std::string& eval_camera, int threads) {
    ConvertOptions opts;
    opts.target = color_model_kind_from_string(target == "sh2" ? "sh" : target);
    opts.fit.samples = samples;
    opts.fit.iters = iters;
    opts.fit.seed = seed;
    opts.threads = threads;
    ConvertSummary summary = convert_checkpoint(in_path, out_path, opts);
    if (!eval_camera.empty()) {
        Camera cam = load_camera_json(eval_camera);
        RenderConfig rc;
        rc.threads = threads;
        Image a = render(load_ply(in_path), cam, rc).image.clamped01();
        Image b = render(load_ply(out_path), cam, rc).image.clamped01();
        summary.psnr_vs_input = psnr(a, b);
    }
    if (!report.empty()) write_convert_report(summary, report);
    std::printf("converted %zu gaussians: %llu -> %llu payload bytes (ratio %.4f, %.1f%% smaller), mean rmse %.3g\n",
                summary.num_gaussians,
                static_cast<unsigned long long>(summary.input_payload_bytes),
                static_cast<unsigned long long>(summary.output_payload_bytes),
                summary.payload_ratio, summary.reduction_percent, summary.rmse_mean);
    if (summary.psnr_vs_input >= 0.0)
        std::printf("psnr vs input render: %.2f dB\n", summary.psnr_vs_input);
    return 0;
}

int cmd_eval(const std::string& scene_path, const std::string& views_dir, const RenderFlags& flags,
             const std::string& csv_path) {
    Scene scene = load_ply(scene_path);
    apply_background(scene, flags);
    RenderConfig cfg = to_config(flags);
    auto views = discover_views(views_dir);
    std::ofstream csv;
    if (!csv_path.empty()) {
        csv.open(csv_path);
        csv << "view,psnr,ssim\n";
    }
    double psnr_sum = 0.0, ssim_sum = 0.0;
    std::printf("%-6s %10s %10s\n", "view", "psnr", "ssim");
    for (std::size_t i = 0; i < views.size(); ++i) {
        Image target = load_target(views[i].image_path);
        Image rendered = render(scene, views[i].cam, cfg).image.clamped01();
        double p = psnr(rendered, target);
        double s = ssim(rendered, target);
        psnr_sum += p;
        ssim_sum += s;
        std::printf("%-6zu %10.4f %10.6f\n", i, p, s);
        if (csv.is_open()) csv << i << "," << p << "," << s << "\n";
    }
    std::printf("%-6s %10.4f %10.6f\n", "mean", psnr_sum / static_cast<double>(views.size()),
                ssim_sum / static_cast<double>(views.size()));
    if (csv.is_open())
        csv << "mean," << psnr_sum / static_cast<double>(views.size()) << ","
            << ssim_sum / static_cast<double>(views.size()) << "\n";
    return 0;
}

int cmd_bench(const std::string& scene_path, const std::string& camera_path, int repeat,
              const RenderFlags& flags) {
    Scene scene = load_ply(scene_path);
    apply_background(scene, flags);
    Camera cam = load_camera_json(camera_path);
    RenderConfig cfg = to_config(flags);

    for (int i = 0; i < 3; ++i) render(scene, cam, cfg);
    std::vector<double> times_ms;
    times_ms.reserve(static_cast<std::size_t>(repeat));
    for (int i = 0; i < repeat; ++i) {
        auto start = std::chrono::steady_clock::now();
        render(scene, cam, cfg);
        auto stop = std::chrono::steady_clock::now();
        times_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    }
    std::sort(times_ms.begin(), times_ms.end());
    double median = times_ms[times_ms.size() / 2];
    if (times_ms.size() % 2 == 0) median = 0.5 * (median + times_ms[times_ms.size() / 2 - 1]);

    ColorModelKind kind = scene.model_kind();
    int degree = 3;
    if (kind == ColorModelKind::SHOnly)
        degree = std::get<SHOnlyModel>(scene.gaussians.front().color).sh.degree;
    std::printf("model=%s gaussians=%zu size=%dx%d repeats=%d\n", to_string(kind),
                scene.gaussians.size(), cam.width, cam.height, repeat);
    std::printf("median_ms=%.3f fps=%.2f\n", median, 1000.0 / median);
    int scene_cost = kind == ColorModelKind::SHOnly ? flops_per_gaussian(kind, degree)
                     : kind == ColorModelKind::MixedSHSG ? flops_per_gaussian(kind, 2)
                                                         : flops_per_gaussian(kind);
    std::printf("color_eval_cost=%d ops/gaussian (total = N x C = %lld)\n", scene_cost,
                static_cast<long long>(scene.gaussians.size()) * scene_cost);
    std::printf("cost table: sh0=%d sh1=%d sh2=%d sh3=%d sg1=%d sg3=%d mixed_d0=%d mixed_d1=%d mixed_d2=%d\n",
                flops_per_gaussian(ColorModelKind::SHOnly, 0),
                flops_per_gaussian(ColorModelKind::SHOnly, 1),
                flops_per_gaussian(ColorModelKind::SHOnly, 2),
                flops_per_gaussian(ColorModelKind::SHOnly, 3),
                flops_per_gaussian(ColorModelKind::DiffuseSG),
                flops_per_gaussian(ColorModelKind::DiffuseOrthoSG),
                flops_per_gaussian(ColorModelKind::MixedSHSG, 0),
                flops_per_gaussian(ColorModelKind::MixedSHSG, 1),
                flops_per_gaussian(ColorModelKind::MixedSHSG, 2));
    return 0;
}

int cmd_synth(const std::string& out_dir, std::size_t count, const std::string& model, int views,
              int size, std::uint64_t seed, int threads) {
    SynthOptions opts;
    opts.kind = color_model_kind_from_string(model);
    Scene scene = make_synthetic_scene(count, seed, opts);
    fs::create_directories(out_dir);
    save_ply(scene, (fs::path(out_dir) / "scene.ply").string(), detect_layout(scene));
    auto cams = make_orbit_cameras(views, size, size, 4.0, 1.2 * size);
    RenderConfig cfg;
    cfg.threads = threads;
    for (std::size_t i = 0; i < cams.size(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof(stem), "view_%03zu", i);
        save_camera_json(cams[i], (fs::path(out_dir) / (std::string(stem) + ".json")).string());
        RenderResult r = render(scene, cams[i], cfg);
        save_float_image(r.image, (fs::path(out_dir) / (std::string(stem) + ".fimg")).string());
        save_png(r.image.clamped01(), (fs::path(out_dir) / (std::string(stem) + ".png")).string());
    }
    // init.ply lets the train subcommand run on the directory as-is.
    save_ply(scene, (fs::path(out_dir) / "init.ply").string(), detect_layout(scene));
    std::cout << "wrote " << count << "-gaussian " << model << " scene and " << views
              << " views to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian-splatting renderer with spherical-gaussian color models"};
    app.require_subcommand(1);

    // render
    auto* render_cmd = app.add_subcommand("render", "Render a checkpoint to PNG");
    std::string scene_path, camera_path, out_path = "out.png", float_dump;
    RenderFlags render_flags;
    render_cmd->add_option("scene", scene_path, "Scene checkpoint (.ply)")->required();
    render_cmd->add_option("--camera", camera_path, "Camera json")->required();
    render_cmd->add_option("--out", out_path, "Output PNG path");
    render_cmd->add_option("--float-dump", float_dump, "Also write a float32 image dump");
    add_render_flags(render_cmd, render_flags);

    // train
    auto* train_cmd = app.add_subcommand("train", "Optimize a scene against target views");
    std::string config_path, data_dir, train_out_dir;
    int train_threads = 0;
    train_cmd->add_option("--config", config_path, "Training config json")->required();
    train_cmd->add_option("--data", data_dir, "View directory (camera json + png/fimg targets)")
        ->required();
    train_cmd->add_option("--out", train_out_dir, "Output directory")->required();
    train_cmd->add_option("--threads", train_threads, "Worker threads (0 = hardware)");

    // convert
    auto* convert_cmd = app.add_subcommand("convert", "Distill an SH checkpoint into an SG model");
    std::string conv_in, conv_out, conv_target = "sg3", conv_report, conv_eval_camera;
    int conv_samples = 256, conv_iters = 4, conv_threads = 0;
    std::uint64_t conv_seed = 0;
    convert_cmd->add_option("input", conv_in, "Reference3DGS checkpoint")->required();
    convert_cmd->add_option("output", conv_out, "Output checkpoint")->required();
    convert_cmd->add_option("--target", conv_target, "Target model: sg1, sg3, mixed or sh2")
        ->check(CLI::IsMember({"sg1", "sg3", "mixed", "sh2"}));
    convert_cmd->add_option("--report", conv_report, "Report prefix (.csv and .json)");
    convert_cmd->add_option("--samples", conv_samples, "Fit sample directions (>= 64)");
    convert_cmd->add_option("--iters", conv_iters, "Coordinate-descent sweeps");
    convert_cmd->add_option("--seed", conv_seed, "Sample lattice seed");
    convert_cmd->add_option("--eval-camera", conv_eval_camera,
                            "Render input and output from this camera and report PSNR");
    convert_cmd->add_option("--threads", conv_threads, "Worker threads (0 = hardware)");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM against a view directory");
    std::string eval_scene, eval_views, eval_csv;
    RenderFlags eval_flags;
    eval_cmd->add_option("scene", eval_scene, "Scene checkpoint (.ply)")->required();
    eval_cmd->add_option("views", eval_views, "View directory")->required();
    eval_cmd->add_option("--out", eval_csv, "Write per-view metrics CSV");
    add_render_flags(eval_cmd, eval_flags);

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Median frame time and color-eval cost");
    std::string bench_scene, bench_camera;
    int bench_repeat = 20;
    RenderFlags bench_flags;
    bench_cmd->add_option("scene", bench_scene, "Scene checkpoint (.ply)")->required();
    bench_cmd->add_option("--camera", bench_camera, "Camera json")->required();
    bench_cmd->add_option("--repeat", bench_repeat, "Timed repetitions (after 3 warm-ups)");
    add_render_flags(bench_cmd, bench_flags);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scene with rendered views");
    std::string synth_out, synth_model = "sh";
    std::size_t synth_count = 500;
    int synth_views = 8, synth_size = 256, synth_threads = 0;
    std::uint64_t synth_seed = 0;
    synth_cmd->add_option("out", synth_out, "Output directory")->required();
    synth_cmd->add_option("--count", synth_count, "Gaussian count");
    synth_cmd->add_option("--model", synth_model, "Color model: sh, sg1, sg3 or mixed")
        ->check(CLI::IsMember({"sh", "sg1", "sg3", "mixed"}));
    synth_cmd->add_option("--views", synth_views, "Number of orbit views");
    synth_cmd->add_option("--size", synth_size, "View resolution");
    synth_cmd->add_option("--seed", synth_seed, "Scene seed");
    synth_cmd->add_option("--threads", synth_threads, "Worker threads (0 = hardware)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (render_cmd->parsed())
            return cmd_render(scene_path, camera_path, out_path, float_dump, render_flags);
        if (train_cmd->parsed()) return cmd_train(config_path, data_dir, train_out_dir, train_threads);
        if (convert_cmd->parsed())
            return cmd_convert(conv_in, conv_out, conv_target, conv_report, conv_samples,
                               conv_iters, conv_seed, conv_eval_camera, conv_threads);
        if (eval_cmd->parsed()) return cmd_eval(eval_scene, eval_views, eval_flags, eval_csv);
        if (bench_cmd->parsed()) return cmd_bench(bench_scene, bench_camera, bench_repeat, bench_flags);
        if (synth_cmd->parsed())
            return cmd_synth(synth_out, synth_count, synth_model, synth_views, synth_size,
                             synth_seed, synth_threads);
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 1;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
