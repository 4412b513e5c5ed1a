#pragma once

#include "sgsplat/color.hpp"
#include "sgsplat/common.hpp"

#include <vector>

namespace sgsplat {

// One 3D Gaussian in stored (pre-activation) form: raw quaternion, log scales,
// logit opacity. Activations happen at the point of use so the optimizer and the
// checkpoint files share a single unconstrained parameter vector.
struct GaussianPrimitive {
    Vec3 position = Vec3::Zero();
    Vec4 rotation = Vec4(1, 0, 0, 0);  // quaternion (w, x, y, z), normalized on use
    Vec3 log_scale = Vec3::Zero();
    double opacity_logit = 0.0;
    ColorModel color = SHOnlyModel{SHCoeffs::zeros(0)};

    double opacity() const { return sigmoid(opacity_logit); }
    Vec3 scale() const { return log_scale.array().exp(); }
};

// Number of stored geometry reals per Gaussian: position 3 + quaternion 4 +
// log scales 3 + opacity logit 1.
inline constexpr int kGeometryParams = 11;

struct Scene {
    std::vector<GaussianPrimitive> gaussians;
    Mat3 shared_axes = Mat3::Identity();  // rows are the shared SG lobe axes
    Vec3 background = Vec3::Zero();

    // Throws InvalidArgument unless all Gaussians carry the same color model
    // variant (and, for SH-backed models, the same degree).
    void check_homogeneous() const;
    ColorModelKind model_kind() const;  // checks homogeneity first

    void set_shared_axes(const Mat3& axes);  // validates orthonormality

    // Flat access to every stored parameter, per Gaussian: 11 geometry reals
    // ([position, rotation, log_scale, opacity_logit]) followed by the color
    // parameters in grad_color order. Used by the optimizer and the
    // finite-difference oracle.
    std::size_t params_per_gaussian() const;
    std::size_t total_params() const;
    double param(std::size_t flat_index) const;
    void set_param(std::size_t flat_index, double value);
};

// Eq-style 3D covariance R * S * S^T * R^T from a quaternion and log scales.
// Symmetric PSD by construction; throws NumericError on a zero quaternion.
Mat3 covariance(const Vec4& rotation, const Vec3& log_scale);

// exp(-1/2 (x - X)^T Sigma^{-1} (x - X)); Sigma gets a 1e-9 diagonal jitter
// before inversion so flattened Gaussians stay evaluable.
double gaussian_density(const GaussianPrimitive& g, const Vec3& x);

}  // namespace sgsplat
