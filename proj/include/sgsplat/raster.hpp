#pragma once

#include "sgsplat/camera.hpp"
#include "sgsplat/image.hpp"
#include "sgsplat/scene.hpp"

#include <optional>

namespace sgsplat {

struct RenderConfig {
    int tile_size = 16;
    // Screen-footprint thresholds (pixels) for the adaptive SH degree of the
    // mixed model: radius < lo -> degree 0, < hi -> degree 1, else degree 2.
    double degree_threshold_lo = 2.0;
    double degree_threshold_hi = 8.0;
    // Forces a fixed evaluation degree for mixed scenes instead of the
    // footprint rule. Invalid for other models.
    std::optional<int> sh_degree_override;
    double early_stop_transmittance = 1e-4;
    int threads = 0;  // 0 = hardware concurrency
};

// Blending constants shared by the tiled renderer and its backward pass.
// A splat contributes to a pixel only when the 2D Mahalanobis distance is
// within 3 sigma (matching the bounding radius) and its alpha clears 1/255.
inline constexpr double kCovarianceDilation = 0.3;
inline constexpr double kSupportMahalanobisSq = 9.0;
inline constexpr double kAlphaClamp = 0.999;
inline constexpr double kAlphaMin = 1.0 / 255.0;

struct Splat2D {
    Vec2 mean2d = Vec2::Zero();   // pixel coordinates
    Vec3 conic = Vec3::Zero();    // (a, b, c) of the inverted 2D covariance
    double depth = 0.0;           // camera-space z
    Vec3 color = Vec3::Zero();
    double opacity = 0.0;         // activated
    double radius_px = 0.0;       // 3 * sqrt(max eigenvalue of the 2D covariance)
};

// Footprint-based SH degree: 0 below `lo`, 1 below `hi`, else 2.
int select_degree(double radius_px, double lo, double hi);

// EWA projection of one Gaussian. Returns nullopt when the center is in front
// of the near plane or the 3-sigma footprint misses the image.
std::optional<Splat2D> project(const GaussianPrimitive& g, const Camera& cam,
                               const Mat3& shared_axes, const RenderConfig& cfg = {});

struct RenderResult {
    Image image;          // H x W x 3 linear RGB (unclamped)
    Image transmittance;  // H x W x 1 transmittance remaining after blending
};

// Depth-sorted tiled alpha compositing. Pure function of its inputs; the output
// is bitwise identical for any thread count.
RenderResult render(const Scene& scene, const Camera& cam, const RenderConfig& cfg = {});

// Static cost (multiplies + adds + transcendental calls) of one color
// evaluation, the per-Gaussian C term of the cost model total = N * C.
// `sh_degree` selects the SH degree for SHOnly (0..3) and the evaluation
// degree for MixedSHSG (0..2); it is ignored for the SG-only models.
int flops_per_gaussian(ColorModelKind kind, int sh_degree = 3);

// Internals shared with the backward pass.
namespace detail {

struct ProjectionCache {
    std::size_t gaussian_index = 0;
    Splat2D splat;
    Vec3 t = Vec3::Zero();        // camera-space center
    Vec3 view_dir = Vec3::Zero(); // unit, world space
    double view_dist = 0.0;       // |position - camera center|
    std::optional<int> degree_used;
    bool clamped_x = false;       // frustum-limit clamps inside the Jacobian
    bool clamped_y = false;
};

std::optional<ProjectionCache> project_cached(const GaussianPrimitive& g, const Camera& cam,
                                              const Mat3& shared_axes, const RenderConfig& cfg,
                                              std::size_t index);

// Visible splats in blending order (depth, then insertion index).
std::vector<ProjectionCache> project_scene(const Scene& scene, const Camera& cam,
                                           const RenderConfig& cfg);

struct TileGrid {
    int tiles_x = 0, tiles_y = 0, tile_size = 16;
    // Per tile: indices into the sorted splat vector, in blending order.
    std::vector<std::vector<std::uint32_t>> lists;
};

TileGrid build_tile_grid(const std::vector<ProjectionCache>& sorted, int width, int height,
                         int tile_size);

}  // namespace detail

}  // namespace sgsplat
