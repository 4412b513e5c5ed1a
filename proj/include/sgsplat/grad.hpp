#pragma once

#include "sgsplat/raster.hpp"

namespace sgsplat {

// Gradient of one Gaussian's stored (pre-activation) parameters; `color`
// follows the grad_color layout.
struct GaussianGrad {
    Vec3 position = Vec3::Zero();
    Vec4 rotation = Vec4::Zero();
    Vec3 log_scale = Vec3::Zero();
    double opacity_logit = 0.0;
    std::vector<double> color;
};

struct SceneGradients {
    std::vector<GaussianGrad> gaussians;

    // Same flattening as Scene::param.
    double flat(const Scene& scene, std::size_t flat_index) const;
    void add_scaled(const SceneGradients& other, double scale);
};

// d(sum_pixels upstream . rendered) / d(stored parameters), propagated through
// blending, projection, activations and the color models. Culled Gaussians get
// zero gradients. Throws NumericError on non-finite upstream values.
SceneGradients backward(const Scene& scene, const Camera& cam, const RenderConfig& cfg,
                        const Image& upstream);

// Central finite difference of the same scalar objective w.r.t. one stored
// parameter; the independent oracle for backward.
double fd_gradient(const Scene& scene, const Camera& cam, const RenderConfig& cfg,
                   const Image& upstream, std::size_t param_index, double h);

}  // namespace sgsplat
