#include "sgsplat/grad.hpp"

#include "sgsplat/synth.hpp"
#include "support/generators.hpp"

#include <doctest.h>

#include <cmath>

using namespace sgsplat;

namespace {

Camera grad_camera(int size = 32) {
    Camera cam;
    cam.translation = Vec3(0, 0, 4.0);
    cam.fx = cam.fy = 40.0;
    cam.cx = cam.cy = size / 2.0;
    cam.width = cam.height = size;
    return cam;
}

Image random_upstream(std::mt19937_64& gen, int w, int h) {
    Image img(w, h, 3);
    for (auto& v : img.data) v = uniform_range(gen, -1.0, 1.0);
    return img;
}

Scene fd_scene(std::size_t count, std::uint64_t seed, ColorModelKind kind) {
    SynthOptions opts;
    opts.kind = kind;
    opts.log_scale_min = -3.0;
    opts.log_scale_max = -1.6;
    return make_synthetic_scene(count, seed, opts);
}

struct FdStats {
    int checked = 0;
    int passed = 0;
    int excluded = 0;
    double worst = 0.0;
};

// Compares backward against central differences at h and h/2; samples where
// the two step sizes disagree sit next to a blending discontinuity and are
// excluded (and counted), per the gradient-check contract.
FdStats check_scene(const Scene& scene, const Camera& cam, const RenderConfig& cfg,
                    const Image& upstream, const std::vector<std::size_t>& indices, double h,
                    double rel_tol, double abs_floor) {
    SceneGradients grads = backward(scene, cam, cfg, upstream);
    FdStats stats;
    for (std::size_t index : indices) {
        double fd_h = fd_gradient(scene, cam, cfg, upstream, index, h);
        double fd_h2 = fd_gradient(scene, cam, cfg, upstream, index, h / 2.0);
        double scale = std::max({std::abs(fd_h), std::abs(fd_h2), 1e-4});
        if (std::abs(fd_h - fd_h2) > 0.01 * scale) {
            ++stats.excluded;
            continue;
        }
        double analytic = grads.flat(scene, index);
        double err = std::abs(analytic - fd_h2);
        double tol = std::max(rel_tol * std::max(std::abs(analytic), std::abs(fd_h2)), abs_floor);
        ++stats.checked;
        if (err <= tol) ++stats.passed;
        stats.worst = std::max(stats.worst, err / tol);
    }
    return stats;
}

}  // namespace

TEST_CASE("zero upstream produces zero gradients") {
    Scene scene = fd_scene(10, 1, ColorModelKind::SHOnly);
    Camera cam = grad_camera();
    Image upstream(cam.width, cam.height, 3);
    SceneGradients grads = backward(scene, cam, {}, upstream);
    for (std::size_t i = 0; i < scene.total_params(); ++i) CHECK(grads.flat(scene, i) == 0.0);
}

TEST_CASE("non-finite upstream raises a numeric error") {
    Scene scene = fd_scene(5, 2, ColorModelKind::SHOnly);
    Camera cam = grad_camera();
    Image upstream(cam.width, cam.height, 3);
    upstream.data[7] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(backward(scene, cam, {}, upstream), NumericError);
    Image wrong(cam.width + 1, cam.height, 3);
    CHECK_THROWS_AS(backward(scene, cam, {}, wrong), InvalidArgument);
}

TEST_CASE("diffuse gradient of a single splat equals the pixel blend weight") {
    Scene scene;
    GaussianPrimitive g;
    g.position = Vec3(0, 0, 0);
    g.log_scale = Vec3::Constant(-1.5);
    g.opacity_logit = logit(0.7);
    DiffuseSGModel m;
    m.diffuse = Vec3(0.5, 0.5, 0.5);
    g.color = std::move(m);
    scene.gaussians = {g};
    Camera cam = grad_camera(33);
    cam.cx = cam.cy = 16.5;

    Image upstream(cam.width, cam.height, 3);
    upstream.at(16, 16, 0) = 1.0;  // select one pixel, red channel

    RenderResult r = render(scene, cam, {});
    double weight = 1.0 - r.transmittance.at(16, 16, 0);  // single splat: a * T = 1 - T_final
    SceneGradients grads = backward(scene, cam, {}, upstream);
    CHECK(grads.gaussians[0].color[0] == doctest::Approx(weight).epsilon(1e-9));
    CHECK(grads.gaussians[0].color[1] == doctest::Approx(0.0));
}

TEST_CASE("gradients of culled gaussians are zero") {
    Scene scene = fd_scene(6, 3, ColorModelKind::SHOnly);
    scene.gaussians[2].position = Vec3(0, 0, -20.0);  // behind the camera
    scene.gaussians[4].position = Vec3(500.0, 0, 0);  // off screen
    Camera cam = grad_camera();
    std::mt19937_64 gen(4);
    Image upstream = random_upstream(gen, cam.width, cam.height);
    SceneGradients grads = backward(scene, cam, {}, upstream);
    for (std::size_t gi : {std::size_t(2), std::size_t(4)}) {
        CHECK(grads.gaussians[gi].position.isZero(0.0));
        CHECK(grads.gaussians[gi].rotation.isZero(0.0));
        CHECK(grads.gaussians[gi].log_scale.isZero(0.0));
        CHECK(grads.gaussians[gi].opacity_logit == 0.0);
        for (double v : grads.gaussians[gi].color) CHECK(v == 0.0);

        std::size_t stride = scene.params_per_gaussian();
        for (std::size_t s = 0; s < stride; s += 5)
            CHECK(fd_gradient(scene, cam, {}, upstream, gi * stride + s, 1e-3) == 0.0);
    }
}

TEST_CASE("central differences converge quadratically on smooth parameters") {
    Scene scene = fd_scene(4, 5, ColorModelKind::DiffuseSG);
    Camera cam = grad_camera();
    std::mt19937_64 gen(6);
    Image upstream = random_upstream(gen, cam.width, cam.height);
    // Diffuse components enter linearly; the difference between step sizes
    // collapses to rounding noise.
    std::size_t index = scene.params_per_gaussian() * 1 + 11;
    double fd1 = fd_gradient(scene, cam, {}, upstream, index, 1e-2);
    double fd2 = fd_gradient(scene, cam, {}, upstream, index, 1e-3);
    CHECK(fd1 == doctest::Approx(fd2).epsilon(1e-6));
}

TEST_CASE("backward matches finite differences across random scenes") {
    const ColorModelKind kinds[4] = {ColorModelKind::SHOnly, ColorModelKind::DiffuseSG,
                                     ColorModelKind::DiffuseOrthoSG, ColorModelKind::MixedSHSG};
    std::mt19937_64 gen(7);
    int total_checked = 0, total_passed = 0, total_excluded = 0;
    for (int trial = 0; trial < 4; ++trial) {
        Scene scene = fd_scene(12, 100 + static_cast<std::uint64_t>(trial), kinds[trial % 4]);
        Camera cam = grad_camera();
        Image upstream = random_upstream(gen, cam.width, cam.height);
        std::vector<std::size_t> indices;
        for (std::size_t i = 0; i < scene.total_params(); i += 1 + gen() % 7)
            indices.push_back(i);
        FdStats stats = check_scene(scene, cam, {}, upstream, indices, 1e-3, 2e-3, 1e-6);
        total_checked += stats.checked;
        total_passed += stats.passed;
        total_excluded += stats.excluded;
    }
    INFO("checked=" << total_checked << " excluded=" << total_excluded);
    CHECK(total_checked > 200);
    CHECK(total_passed == total_checked);
}

TEST_CASE("mixed model with frozen zero-amplitude lobes backpropagates like pure SH") {
    SynthOptions opts;
    opts.kind = ColorModelKind::MixedSHSG;
    Scene mixed = make_synthetic_scene(15, 31, opts);
    Scene pure;
    pure.background = mixed.background;
    for (auto& g : mixed.gaussians) {
        auto& m = std::get<MixedSHSGModel>(g.color);
        for (int i = 0; i < 3; ++i) m.alpha[static_cast<std::size_t>(i)] = Vec3::Zero();
        GaussianPrimitive p = g;
        p.color = SHOnlyModel{m.sh};
        pure.gaussians.push_back(std::move(p));
    }
    Camera cam = grad_camera();
    std::mt19937_64 gen(8);
    Image upstream = random_upstream(gen, cam.width, cam.height);
    // Pin the evaluation degree so both scenes decode identically.
    RenderConfig cfg;
    cfg.degree_threshold_lo = 0.0;
    cfg.degree_threshold_hi = 0.0;
    SceneGradients gm = backward(mixed, cam, cfg, upstream);
    SceneGradients gp = backward(pure, cam, {}, upstream);
    for (std::size_t gi = 0; gi < mixed.gaussians.size(); ++gi) {
        CHECK(gm.gaussians[gi].position.isApprox(gp.gaussians[gi].position, 1e-9));
        CHECK(gm.gaussians[gi].rotation.isApprox(gp.gaussians[gi].rotation, 1e-9));
        CHECK(gm.gaussians[gi].log_scale.isApprox(gp.gaussians[gi].log_scale, 1e-9));
        CHECK(gm.gaussians[gi].opacity_logit ==
              doctest::Approx(gp.gaussians[gi].opacity_logit).epsilon(1e-9));
        for (int k = 0; k < 27; ++k)
            CHECK(gm.gaussians[gi].color[static_cast<std::size_t>(k)] ==
                  doctest::Approx(gp.gaussians[gi].color[static_cast<std::size_t>(k)]).epsilon(1e-9));
    }
}

TEST_CASE("backward accumulation is deterministic for a fixed thread count") {
    Scene scene = fd_scene(40, 77, ColorModelKind::MixedSHSG);
    Camera cam = grad_camera(48);
    std::mt19937_64 gen(9);
    Image upstream = random_upstream(gen, cam.width, cam.height);
    RenderConfig cfg;
    cfg.threads = 2;
    SceneGradients a = backward(scene, cam, cfg, upstream);
    SceneGradients b = backward(scene, cam, cfg, upstream);
    for (std::size_t i = 0; i < scene.total_params(); ++i)
        CHECK(a.flat(scene, i) == b.flat(scene, i));
}
