#pragma once

#include "sgsplat/common.hpp"

#include <array>
#include <optional>
#include <variant>
#include <vector>

namespace sgsplat {

// Real spherical-harmonic constants in the ordering used by the 3D-GS checkpoint
// ecosystem. Colors decode as max(0, 0.5 + sum_i coeff_i * Y_i(d)), so files written
// by other splatting tools evaluate identically here.
namespace sh {
constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr std::array<double, 5> kC2 = {1.0925484305920792, -1.0925484305920792,
                                       0.31539156525252005, -1.0925484305920792,
                                       0.5462742152960396};
constexpr std::array<double, 7> kC3 = {-0.5900435899266435, 2.890611442640554,
                                       -0.4570457994644658, 0.3731763325901154,
                                       -0.4570457994644658, 1.445305721320277,
                                       -0.5900435899266435};
constexpr int coeff_count(int degree) { return (degree + 1) * (degree + 1); }
}  // namespace sh

// Per-channel SH coefficients, coefficient-major: coeffs[i] is the RGB triple for
// basis function i in (l, m) order, l = 0..degree, m = -l..l.
struct SHCoeffs {
    int degree = 0;
    std::vector<Vec3> coeffs;

    static SHCoeffs zeros(int degree);
};

// One spherical-Gaussian lobe in activated form: alpha * exp(lambda * (d.mu - 1)).
// lambda >= 0, |mu| == 1. The stored/optimized form keeps log(lambda) and an
// unnormalized mu; see the model structs below.
struct SGLobe {
    Vec3 alpha = Vec3::Zero();
    double lambda = 0.0;
    Vec3 mu = Vec3::UnitX();
};

// Three lobes on a shared orthonormal axis triple. Construction validates the
// orthogonality condition |axes * axes^T - I|_max <= 1e-6.
struct OrthoSGSet {
    std::array<SGLobe, 3> lobes;
    Mat3 axes = Mat3::Identity();

    OrthoSGSet() = default;
    OrthoSGSet(const std::array<SGLobe, 3>& lobes, const Mat3& axes);
};

// Throws InvalidArgument unless the rows of `axes` form an orthonormal triple.
void validate_ortho_axes(const Mat3& axes, double tol = 1e-6);

enum class ColorModelKind { SHOnly, DiffuseSG, DiffuseOrthoSG, MixedSHSG };

const char* to_string(ColorModelKind kind);
ColorModelKind color_model_kind_from_string(const std::string& name);

struct SHOnlyModel {
    SHCoeffs sh;  // degree 0..3
};

// Diffuse base color plus one free-axis lobe. Free parameters (10):
// diffuse (3), alpha (3), log_lambda (1), mu (3, renormalized on use).
struct DiffuseSGModel {
    Vec3 diffuse = Vec3::Zero();
    Vec3 alpha = Vec3::Zero();
    double log_lambda = 0.0;  // lambda = exp(log_lambda), init 1.0
    Vec3 mu = Vec3::UnitX();

    SGLobe lobe() const;
};

// Diffuse base color plus three lobes on the scene-shared axis triple.
// Free parameters per Gaussian (15): diffuse (3) + 3 x (alpha 3 + log_lambda 1).
struct DiffuseOrthoSGModel {
    Vec3 diffuse = Vec3::Zero();
    std::array<Vec3, 3> alpha = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    std::array<double, 3> log_lambda = {0.0, 0.0, 0.0};

    SGLobe lobe(int i, const Mat3& axes) const;
};

// Degree-<=2 SH plus three shared-axis lobes. Storage is always degree 2
// (27 coefficients); lower degrees are selected at evaluation time.
// Free parameters per Gaussian (39): sh (27) + 3 x (alpha 3 + log_lambda 1).
struct MixedSHSGModel {
    SHCoeffs sh;  // degree <= 2
    std::array<Vec3, 3> alpha = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    std::array<double, 3> log_lambda = {0.0, 0.0, 0.0};

    SGLobe lobe(int i, const Mat3& axes) const;
};

using ColorModel = std::variant<SHOnlyModel, DiffuseSGModel, DiffuseOrthoSGModel, MixedSHSGModel>;

ColorModelKind kind_of(const ColorModel& model);

// SH basis values Y_lm(direction) for l = 0..degree in checkpoint order.
// Precondition: |direction| == 1 within 1e-6, degree in 0..3.
std::vector<double> eval_sh_basis(const Vec3& direction, int degree);

// alpha * exp(lambda * (d.mu - 1)) for a unit direction d.
Vec3 eval_sg(const SGLobe& lobe, const Vec3& direction);

// View-dependent color of `model` seen from unit `direction`.
// SH-backed parts (SHOnly, MixedSHSG) decode as 0.5 + SH(d); diffuse-backed parts
// use the stored diffuse directly; lobes add raw radiance. The result is clamped
// to >= 0 per channel. `sh_degree_override` truncates the SH part and is only
// accepted for MixedSHSG.
Vec3 eval_color(const ColorModel& model, const Mat3& axes, const Vec3& direction,
                std::optional<int> sh_degree_override = std::nullopt);
Vec3 eval_color(const ColorModel& model, const Vec3& direction,
                std::optional<int> sh_degree_override = std::nullopt);

// Gradient of dot(upstream, eval_color(...)) w.r.t. the model's stored parameters,
// flattened in the canonical order below, plus the partial w.r.t. the (unit)
// direction, which the renderer backward chains into position gradients.
//
//   SHOnly:         [coeff 0 rgb, coeff 1 rgb, ...]            3*(degree+1)^2
//   DiffuseSG:      [diffuse rgb, alpha rgb, log_lambda, mu xyz]            10
//   DiffuseOrthoSG: [diffuse rgb, (alpha rgb, log_lambda) x 3]              15
//   MixedSHSG:      [coeff rgb x 9, (alpha rgb, log_lambda) x 3]            39
struct ColorGrad {
    std::vector<double> params;
    Vec3 d_direction = Vec3::Zero();
};

ColorGrad grad_color(const ColorModel& model, const Mat3& axes, const Vec3& direction,
                     const Vec3& upstream, std::optional<int> sh_degree_override = std::nullopt);

// Number of per-Gaussian stored reals for the color model (48 for degree-3 SH,
// 10 for DiffuseSG, 15 for DiffuseOrthoSG, 39 for MixedSHSG).
int param_count(const ColorModel& model);
int param_count(ColorModelKind kind, int sh_degree = 3);

// Scene-shared parameters counted once per scene: 3 for the orthogonal axis
// triple (a rotation), 0 for models without shared axes.
int shared_param_count(ColorModelKind kind);

// Flat access to the canonical parameter vector (same order as ColorGrad::params).
double color_param(const ColorModel& model, int index);
void set_color_param(ColorModel& model, int index, double value);

}  // namespace sgsplat
