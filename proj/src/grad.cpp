#include "sgsplat/grad.hpp"

#include <algorithm>
#include <cmath>

namespace sgsplat {

namespace {

using detail::ProjectionCache;

// Per-splat accumulators for the screen-space quantities produced by the
// per-pixel blend backward. The projection chain to scene parameters runs once
// per splat afterwards.
struct SplatAccum {
    Vec3 d_color = Vec3::Zero();
    double d_opacity = 0.0;
    Vec2 d_mean = Vec2::Zero();
    Vec3 d_conic = Vec3::Zero();  // symmetric gradient (g00, g01, g11) of the conic matrix
};

struct PixelHit {
    std::uint32_t splat;
    double alpha;
    double transmittance;  // before this splat
    double gaussian;       // exp(-m2 / 2)
    double dx, dy;
    bool clamped;
};

// d(rotation matrix)/d(unit quaternion component), (w, x, y, z) convention.
std::array<Mat3, 4> rotation_quat_jacobians(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    std::array<Mat3, 4> j;
    j[0] << 0, -z, y, z, 0, -x, -y, x, 0;
    j[1] << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
    j[2] << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
    j[3] << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
    for (auto& m : j) m *= 2.0;
    return j;
}

}  // namespace

double SceneGradients::flat(const Scene& scene, std::size_t flat_index) const {
    std::size_t stride = scene.params_per_gaussian();
    if (stride == 0 || flat_index >= scene.total_params())
        throw InvalidArgument("gradient index out of range");
    const GaussianGrad& g = gaussians[flat_index / stride];
    int slot = static_cast<int>(flat_index % stride);
    if (slot < 3) return g.position[slot];
    if (slot < 7) return g.rotation[slot - 3];
    if (slot < 10) return g.log_scale[slot - 7];
    if (slot == 10) return g.opacity_logit;
    return g.color[static_cast<std::size_t>(slot - kGeometryParams)];
}

void SceneGradients::add_scaled(const SceneGradients& other, double scale) {
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        gaussians[i].position += scale * other.gaussians[i].position;
        gaussians[i].rotation += scale * other.gaussians[i].rotation;
        gaussians[i].log_scale += scale * other.gaussians[i].log_scale;
        gaussians[i].opacity_logit += scale * other.gaussians[i].opacity_logit;
        for (std::size_t k = 0; k < gaussians[i].color.size(); ++k)
            gaussians[i].color[k] += scale * other.gaussians[i].color[k];
    }
}

SceneGradients backward(const Scene& scene, const Camera& cam, const RenderConfig& cfg,
                        const Image& upstream) {
    if (upstream.width != cam.width || upstream.height != cam.height || upstream.channels != 3)
        throw InvalidArgument("upstream image dimensions do not match the render output");
    for (double v : upstream.data)
        if (!std::isfinite(v)) throw NumericError("non-finite upstream gradient");

    SceneGradients grads;
    grads.gaussians.resize(scene.gaussians.size());
    for (std::size_t i = 0; i < scene.gaussians.size(); ++i)
        grads.gaussians[i].color.assign(static_cast<std::size_t>(param_count(scene.gaussians[i].color)), 0.0);
    if (scene.gaussians.empty()) return grads;

    auto sorted = detail::project_scene(scene, cam, cfg);
    if (sorted.empty()) return grads;
    auto grid = detail::build_tile_grid(sorted, cam.width, cam.height, cfg.tile_size);

    // Pass 1: per-pixel blend backward into per-splat screen-space accumulators.
    // Workers own disjoint tile shards and private buffers, merged in worker
    // order, so the reduction order is fixed for a given thread count.
    std::size_t workers = std::min<std::size_t>(
        static_cast<std::size_t>(resolve_thread_count(cfg.threads)), std::max<std::size_t>(grid.lists.size(), 1));
    std::vector<std::vector<SplatAccum>> buffers(workers, std::vector<SplatAccum>(sorted.size()));

    parallel_for_workers(grid.lists.size(), cfg.threads, workers, [&](std::size_t tile, std::size_t w) {
        auto& accum = buffers[w];
        std::vector<PixelHit> hits;
        int tx = static_cast<int>(tile) % grid.tiles_x;
        int ty = static_cast<int>(tile) / grid.tiles_x;
        const auto& list = grid.lists[tile];
        if (list.empty()) return;
        int px0 = tx * cfg.tile_size, py0 = ty * cfg.tile_size;
        int px1 = std::min(cam.width, px0 + cfg.tile_size);
        int py1 = std::min(cam.height, py0 + cfg.tile_size);
        for (int py = py0; py < py1; ++py) {
            for (int px = px0; px < px1; ++px) {
                const double cx = px + 0.5, cy = py + 0.5;
                hits.clear();
                double transmittance = 1.0;
                for (std::uint32_t si : list) {
                    const Splat2D& s = sorted[si].splat;
                    double dx = cx - s.mean2d.x();
                    double dy = cy - s.mean2d.y();
                    double m2 = s.conic[0] * dx * dx + 2.0 * s.conic[1] * dx * dy +
                                s.conic[2] * dy * dy;
                    if (m2 > kSupportMahalanobisSq) continue;
                    double gauss = std::exp(-0.5 * m2);
                    double alpha = s.opacity * gauss;
                    bool clamped = alpha > kAlphaClamp;
                    if (clamped) alpha = kAlphaClamp;
                    if (alpha < kAlphaMin) continue;
                    hits.push_back({si, alpha, transmittance, gauss, dx, dy, clamped});
                    transmittance *= 1.0 - alpha;
                    if (transmittance < cfg.early_stop_transmittance) break;
                }
                Vec3 g(upstream.at(py, px, 0), upstream.at(py, px, 1), upstream.at(py, px, 2));
                // Suffix sum of everything blended behind the current splat,
                // background included, weighted by the upstream gradient.
                Vec3 suffix = transmittance * scene.background;
                for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
                    const PixelHit& hit = *it;
                    const Splat2D& s = sorted[hit.splat].splat;
                    SplatAccum& acc = accum[hit.splat];
                    double weight = hit.alpha * hit.transmittance;
                    acc.d_color += weight * g;
                    double d_alpha = g.dot(s.color) * hit.transmittance -
                                     g.dot(suffix) / (1.0 - hit.alpha);
                    suffix += weight * s.color;
                    if (hit.clamped) continue;  // flat region of min(alpha, clamp)
                    acc.d_opacity += d_alpha * hit.gaussian;
                    double d_m2 = -0.5 * d_alpha * s.opacity * hit.gaussian;
                    double mx = 2.0 * (s.conic[0] * hit.dx + s.conic[1] * hit.dy);
                    double my = 2.0 * (s.conic[1] * hit.dx + s.conic[2] * hit.dy);
                    acc.d_mean -= d_m2 * Vec2(mx, my);
                    acc.d_conic += d_m2 * Vec3(hit.dx * hit.dx, hit.dx * hit.dy, hit.dy * hit.dy);
                }
            }
        }
    });
    for (std::size_t w = 1; w < workers; ++w)
        for (std::size_t s = 0; s < sorted.size(); ++s) {
            buffers[0][s].d_color += buffers[w][s].d_color;
            buffers[0][s].d_opacity += buffers[w][s].d_opacity;
            buffers[0][s].d_mean += buffers[w][s].d_mean;
            buffers[0][s].d_conic += buffers[w][s].d_conic;
        }
    const auto& accum = buffers[0];

    // Pass 2: chain screen-space gradients through projection, covariance and
    // the color model. Each splat maps to a distinct Gaussian.
    parallel_for(sorted.size(), cfg.threads, [&](std::size_t si) {
        const ProjectionCache& pc = sorted[si];
        const SplatAccum& acc = accum[si];
        const GaussianPrimitive& g = scene.gaussians[pc.gaussian_index];
        GaussianGrad& out = grads.gaussians[pc.gaussian_index];

        // Color parameters and the view-direction contribution to position.
        ColorGrad cg = grad_color(g.color, scene.shared_axes, pc.view_dir, acc.d_color,
                                  pc.degree_used);
        out.color = std::move(cg.params);
        Vec3 d_dir = cg.d_direction;
        out.position += (d_dir - pc.view_dir * pc.view_dir.dot(d_dir)) / pc.view_dist;

        // Opacity activation.
        double op = pc.splat.opacity;
        out.opacity_logit += acc.d_opacity * op * (1.0 - op);

        // Conic -> 2D covariance. With K = M^-1 and the symmetric-form gradient
        // G of K, the matrix gradient w.r.t. M is -K G K.
        Mat2 conic_mat;
        conic_mat << pc.splat.conic[0], pc.splat.conic[1], pc.splat.conic[1], pc.splat.conic[2];
        Mat2 g_conic;
        g_conic << acc.d_conic[0], acc.d_conic[1], acc.d_conic[1], acc.d_conic[2];
        Mat2 g_cov2d = -conic_mat * g_conic * conic_mat;

        // 2D covariance -> 3D covariance and Jacobian. cov2d = T Sigma T^T + cI
        // with T = J W.
        const double tz = pc.t.z();
        const double lim_x = 1.3 * (0.5 * cam.width / cam.fx);
        const double lim_y = 1.3 * (0.5 * cam.height / cam.fy);
        const double txc = std::clamp(pc.t.x() / tz, -lim_x, lim_x) * tz;
        const double tyc = std::clamp(pc.t.y() / tz, -lim_y, lim_y) * tz;
        Eigen::Matrix<double, 2, 3> jac;
        jac << cam.fx / tz, 0.0, -cam.fx * txc / (tz * tz),
            0.0, cam.fy / tz, -cam.fy * tyc / (tz * tz);
        Eigen::Matrix<double, 2, 3> t_mat = jac * cam.rotation;
        Mat3 cov3d = covariance(g.rotation, g.log_scale);

        Mat3 g_cov3d = t_mat.transpose() * g_cov2d * t_mat;
        Eigen::Matrix<double, 2, 3> g_t_mat = 2.0 * g_cov2d * t_mat * cov3d;
        Eigen::Matrix<double, 2, 3> g_jac = g_t_mat * cam.rotation.transpose();

        // Jacobian entries -> camera-space position.
        Vec3 d_t = Vec3::Zero();
        d_t[2] += g_jac(0, 0) * (-cam.fx / (tz * tz));
        d_t[2] += g_jac(1, 1) * (-cam.fy / (tz * tz));
        if (pc.clamped_x) {
            // txc = sign * lim_x * tz, so J(0,2) = -fx * txc / tz^2 = -fx * sign * lim_x / tz.
            d_t[2] += g_jac(0, 2) * (cam.fx * txc / (tz * tz * tz));
        } else {
            d_t[0] += g_jac(0, 2) * (-cam.fx / (tz * tz));
            d_t[2] += g_jac(0, 2) * (2.0 * cam.fx * pc.t.x() / (tz * tz * tz));
        }
        if (pc.clamped_y) {
            d_t[2] += g_jac(1, 2) * (cam.fy * tyc / (tz * tz * tz));
        } else {
            d_t[1] += g_jac(1, 2) * (-cam.fy / (tz * tz));
            d_t[2] += g_jac(1, 2) * (2.0 * cam.fy * pc.t.y() / (tz * tz * tz));
        }

        // Projected mean -> camera-space position (unclamped projection).
        d_t[0] += acc.d_mean.x() * cam.fx / tz;
        d_t[1] += acc.d_mean.y() * cam.fy / tz;
        d_t[2] += -acc.d_mean.x() * cam.fx * pc.t.x() / (tz * tz) -
                  acc.d_mean.y() * cam.fy * pc.t.y() / (tz * tz);

        out.position += cam.rotation.transpose() * d_t;

        // 3D covariance -> rotation and log scales. Sigma = M3 M3^T, M3 = R S.
        Vec4 q = g.rotation / g.rotation.norm();
        Mat3 rot = quat_to_rotation(g.rotation);
        Vec3 s_act = g.scale();
        Mat3 m3 = rot * s_act.asDiagonal();
        Mat3 g_m3 = 2.0 * g_cov3d * m3;

        for (int k = 0; k < 3; ++k)
            out.log_scale[k] += g_m3.col(k).dot(rot.col(k)) * s_act[k];

        Mat3 g_rot = g_m3 * s_act.asDiagonal();
        auto jacs = rotation_quat_jacobians(q);
        Vec4 g_qn;
        for (int k = 0; k < 4; ++k) g_qn[k] = (g_rot.cwiseProduct(jacs[static_cast<std::size_t>(k)])).sum();
        double qnorm = g.rotation.norm();
        out.rotation += (g_qn - q * q.dot(g_qn)) / qnorm;
    });

    return grads;
}

double fd_gradient(const Scene& scene, const Camera& cam, const RenderConfig& cfg,
                   const Image& upstream, std::size_t param_index, double h) {
    if (h <= 0.0) throw InvalidArgument("finite-difference step must be positive");
    auto objective = [&](const Scene& s) {
        RenderResult r = render(s, cam, cfg);
        double total = 0.0;
        for (std::size_t i = 0; i < r.image.size(); ++i) total += r.image.data[i] * upstream.data[i];
        return total;
    };
    Scene probe = scene;
    double original = probe.param(param_index);
    probe.set_param(param_index, original + h);
    double hi = objective(probe);
    probe.set_param(param_index, original - h);
    double lo = objective(probe);
    return (hi - lo) / (2.0 * h);
}

}  // namespace sgsplat
