#include "sgsplat/raster.hpp"

#include <algorithm>
#include <cmath>

namespace sgsplat {

int select_degree(double radius_px, double lo, double hi) {
    if (lo > hi) throw InvalidArgument("degree thresholds must satisfy lo <= hi");
    if (radius_px < lo) return 0;
    if (radius_px < hi) return 1;
    return 2;
}

namespace detail {

std::optional<ProjectionCache> project_cached(const GaussianPrimitive& g, const Camera& cam,
                                              const Mat3& shared_axes, const RenderConfig& cfg,
                                              std::size_t index) {
    ProjectionCache pc;
    pc.gaussian_index = index;
    pc.t = cam.to_camera(g.position);
    if (pc.t.z() < cam.near) return std::nullopt;

    Mat3 cov3d = covariance(g.rotation, g.log_scale);

    // Local affine (EWA) Jacobian of the perspective projection, with the
    // reference frustum clamp on the lateral ratios.
    const double tz = pc.t.z();
    const double lim_x = 1.3 * (0.5 * cam.width / cam.fx);
    const double lim_y = 1.3 * (0.5 * cam.height / cam.fy);
    double rx = pc.t.x() / tz;
    double ry = pc.t.y() / tz;
    pc.clamped_x = rx < -lim_x || rx > lim_x;
    pc.clamped_y = ry < -lim_y || ry > lim_y;
    const double txc = std::clamp(rx, -lim_x, lim_x) * tz;
    const double tyc = std::clamp(ry, -lim_y, lim_y) * tz;

    Eigen::Matrix<double, 2, 3> jac;
    jac << cam.fx / tz, 0.0, -cam.fx * txc / (tz * tz),
        0.0, cam.fy / tz, -cam.fy * tyc / (tz * tz);
    Eigen::Matrix<double, 2, 3> t_mat = jac * cam.rotation;
    Mat2 cov2d = t_mat * cov3d * t_mat.transpose();
    cov2d(0, 0) += kCovarianceDilation;
    cov2d(1, 1) += kCovarianceDilation;

    const double a = cov2d(0, 0), b = cov2d(0, 1), c = cov2d(1, 1);
    const double det = a * c - b * b;
    if (det <= 0.0) return std::nullopt;

    const double mid = 0.5 * (a + c);
    const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
    pc.splat.radius_px = 3.0 * std::sqrt(lambda_max);

    pc.splat.mean2d = Vec2(cam.fx * pc.t.x() / tz + cam.cx, cam.fy * pc.t.y() / tz + cam.cy);
    if (pc.splat.mean2d.x() + pc.splat.radius_px < 0.0 ||
        pc.splat.mean2d.x() - pc.splat.radius_px > cam.width ||
        pc.splat.mean2d.y() + pc.splat.radius_px < 0.0 ||
        pc.splat.mean2d.y() - pc.splat.radius_px > cam.height)
        return std::nullopt;

    pc.splat.conic = Vec3(c / det, -b / det, a / det);
    pc.splat.depth = tz;
    pc.splat.opacity = g.opacity();

    Vec3 offset = g.position - cam.center();
    pc.view_dist = offset.norm();
    if (pc.view_dist < 1e-12) return std::nullopt;
    pc.view_dir = offset / pc.view_dist;
    if (kind_of(g.color) == ColorModelKind::MixedSHSG) {
        pc.degree_used = cfg.sh_degree_override
                             ? *cfg.sh_degree_override
                             : select_degree(pc.splat.radius_px, cfg.degree_threshold_lo,
                                             cfg.degree_threshold_hi);
    } else if (cfg.sh_degree_override) {
        throw InvalidArgument("sh_degree_override is only valid for mixed scenes");
    }
    pc.splat.color = eval_color(g.color, shared_axes, pc.view_dir, pc.degree_used);
    return pc;
}

std::vector<ProjectionCache> project_scene(const Scene& scene, const Camera& cam,
                                           const RenderConfig& cfg) {
    scene.check_homogeneous();
    cam.validate();
    std::vector<std::optional<ProjectionCache>> slots(scene.gaussians.size());
    parallel_for(scene.gaussians.size(), cfg.threads, [&](std::size_t i) {
        slots[i] = project_cached(scene.gaussians[i], cam, scene.shared_axes, cfg, i);
    });
    // Global front-to-back order; insertion index breaks depth ties so the
    // result is independent of the projection schedule. Sort an index array
    // and gather once instead of shuffling the fat cache records.
    std::vector<std::uint32_t> order;
    order.reserve(slots.size());
    for (std::uint32_t i = 0; i < slots.size(); ++i)
        if (slots[i]) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::uint32_t l, std::uint32_t r) {
        double dl = slots[l]->splat.depth, dr = slots[r]->splat.depth;
        if (dl != dr) return dl < dr;
        return l < r;
    });
    std::vector<ProjectionCache> visible;
    visible.reserve(order.size());
    for (std::uint32_t i : order) visible.push_back(std::move(*slots[i]));
    return visible;
}

TileGrid build_tile_grid(const std::vector<ProjectionCache>& sorted, int width, int height,
                         int tile_size) {
    TileGrid grid;
    grid.tile_size = tile_size;
    grid.tiles_x = (width + tile_size - 1) / tile_size;
    grid.tiles_y = (height + tile_size - 1) / tile_size;
    grid.lists.assign(static_cast<std::size_t>(grid.tiles_x) * static_cast<std::size_t>(grid.tiles_y), {});
    for (std::uint32_t si = 0; si < sorted.size(); ++si) {
        const Splat2D& s = sorted[si].splat;
        int x0 = std::max(0, static_cast<int>(std::floor((s.mean2d.x() - s.radius_px) / tile_size)));
        int x1 = std::min(grid.tiles_x - 1,
                          static_cast<int>(std::floor((s.mean2d.x() + s.radius_px) / tile_size)));
        int y0 = std::max(0, static_cast<int>(std::floor((s.mean2d.y() - s.radius_px) / tile_size)));
        int y1 = std::min(grid.tiles_y - 1,
                          static_cast<int>(std::floor((s.mean2d.y() + s.radius_px) / tile_size)));
        for (int ty = y0; ty <= y1; ++ty)
            for (int tx = x0; tx <= x1; ++tx)
                grid.lists[static_cast<std::size_t>(ty) * static_cast<std::size_t>(grid.tiles_x) +
                           static_cast<std::size_t>(tx)]
                    .push_back(si);
    }
    return grid;
}

}  // namespace detail

std::optional<Splat2D> project(const GaussianPrimitive& g, const Camera& cam,
                               const Mat3& shared_axes, const RenderConfig& cfg) {
    auto pc = detail::project_cached(g, cam, shared_axes, cfg, 0);
    if (!pc) return std::nullopt;
    return pc->splat;
}

RenderResult render(const Scene& scene, const Camera& cam, const RenderConfig& cfg) {
    if (cfg.tile_size < 1) throw InvalidArgument("tile_size must be >= 1");
    auto sorted = detail::project_scene(scene, cam, cfg);
    auto grid = detail::build_tile_grid(sorted, cam.width, cam.height, cfg.tile_size);

    // Compact copy of the blend-relevant fields for the per-pixel loop.
    std::vector<Splat2D> splats;
    splats.reserve(sorted.size());
    for (const auto& pc : sorted) splats.push_back(pc.splat);

    RenderResult out;
    out.image = Image(cam.width, cam.height, 3);
    out.transmittance = Image(cam.width, cam.height, 1);

    parallel_for(grid.lists.size(), cfg.threads, [&](std::size_t tile) {
        int tx = static_cast<int>(tile) % grid.tiles_x;
        int ty = static_cast<int>(tile) / grid.tiles_x;
        const auto& list = grid.lists[tile];
        int px0 = tx * cfg.tile_size;
        int py0 = ty * cfg.tile_size;
        int px1 = std::min(cam.width, px0 + cfg.tile_size);
        int py1 = std::min(cam.height, py0 + cfg.tile_size);
        for (int py = py0; py < py1; ++py) {
            for (int px = px0; px < px1; ++px) {
                double cx = px + 0.5, cy = py + 0.5;
                Vec3 acc = Vec3::Zero();
                double transmittance = 1.0;
                for (std::uint32_t si : list) {
                    const Splat2D& s = splats[si];
                    double dx = cx - s.mean2d.x();
                    double dy = cy - s.mean2d.y();
                    double m2 = s.conic[0] * dx * dx + 2.0 * s.conic[1] * dx * dy +
                                s.conic[2] * dy * dy;
                    if (m2 > kSupportMahalanobisSq) continue;
                    double alpha = std::min(s.opacity * std::exp(-0.5 * m2), kAlphaClamp);
                    if (alpha < kAlphaMin) continue;
                    acc += s.color * (alpha * transmittance);
                    transmittance *= 1.0 - alpha;
                    if (transmittance < cfg.early_stop_transmittance) break;
                }
                acc += transmittance * scene.background;
                for (int c = 0; c < 3; ++c) out.image.at(py, px, c) = acc[c];
                out.transmittance.at(py, px, 0) = transmittance;
            }
        }
    });
    return out;
}

namespace {

// Cost of evaluating the SH basis polynomials, per degree, counting each scalar
// multiply/add once (constants folded): band 1 costs 3, band 2 costs 15,
// band 3 costs 25.
int sh_basis_ops(int degree) {
    static constexpr int kBandOps[4] = {0, 3, 15, 25};
    int ops = 0;
    for (int l = 1; l <= degree; ++l) ops += kBandOps[l];
    return ops;
}

// Coefficient accumulation: per channel, one multiply and one add per basis
// value (the trailing add folds in the 0.5 offset).
int sh_accum_ops(int degree) { return 2 * sh::coeff_count(degree) * 3; }

// One lobe: 3-term dot (5), bias subtract (1), sharpness multiply (1), exp (1).
constexpr int kLobeOps = 8;

}  // namespace

int flops_per_gaussian(ColorModelKind kind, int sh_degree) {
    switch (kind) {
        case ColorModelKind::SHOnly:
            if (sh_degree < 0 || sh_degree > 3) throw InvalidArgument("SH degree must be 0..3");
            return sh_basis_ops(sh_degree) + sh_accum_ops(sh_degree);
        case ColorModelKind::DiffuseSG:
            // One lobe plus per-channel multiply-add against the diffuse base.
            return kLobeOps + 2 * 3;
        case ColorModelKind::DiffuseOrthoSG:
            // Three lobes, then three multiply-adds per channel.
            return 3 * kLobeOps + 2 * 3 * 3;
        case ColorModelKind::MixedSHSG:
            if (sh_degree < 0 || sh_degree > 2) throw InvalidArgument("mixed degree must be 0..2");
            return sh_basis_ops(sh_degree) + sh_accum_ops(sh_degree) + 3 * kLobeOps + 2 * 3 * 3;
    }
    return 0;
}

}  // namespace sgsplat
