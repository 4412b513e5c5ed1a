#include "sgsplat/scene.hpp"

#include <sstream>

namespace sgsplat {

void Scene::check_homogeneous() const {
    if (gaussians.empty()) return;
    ColorModelKind kind = kind_of(gaussians.front().color);
    int degree = -1;
    if (kind == ColorModelKind::SHOnly)
        degree = std::get<SHOnlyModel>(gaussians.front().color).sh.degree;
    if (kind == ColorModelKind::MixedSHSG)
        degree = std::get<MixedSHSGModel>(gaussians.front().color).sh.degree;
    for (std::size_t i = 1; i < gaussians.size(); ++i) {
        const auto& c = gaussians[i].color;
        if (kind_of(c) != kind)
            throw InvalidArgument("scene mixes color model variants (gaussian " +
                                  std::to_string(i) + ")");
        if (kind == ColorModelKind::SHOnly && std::get<SHOnlyModel>(c).sh.degree != degree)
            throw InvalidArgument("scene mixes SH degrees");
        if (kind == ColorModelKind::MixedSHSG && std::get<MixedSHSGModel>(c).sh.degree != degree)
            throw InvalidArgument("scene mixes SH degrees");
    }
}

ColorModelKind Scene::model_kind() const {
    if (gaussians.empty()) throw InvalidArgument("empty scene has no color model");
    check_homogeneous();
    return kind_of(gaussians.front().color);
}

void Scene::set_shared_axes(const Mat3& axes) {
    validate_ortho_axes(axes);
    shared_axes = axes;
}

std::size_t Scene::params_per_gaussian() const {
    if (gaussians.empty()) return 0;
    return static_cast<std::size_t>(kGeometryParams + param_count(gaussians.front().color));
}

std::size_t Scene::total_params() const { return params_per_gaussian() * gaussians.size(); }

namespace {

struct ParamRef {
    std::size_t gaussian;
    int slot;  // 0..10 geometry, >= 11 color
};

ParamRef locate(const Scene& scene, std::size_t flat_index) {
    std::size_t stride = scene.params_per_gaussian();
    if (stride == 0 || flat_index >= scene.total_params())
        throw InvalidArgument("parameter index out of range");
    return {flat_index / stride, static_cast<int>(flat_index % stride)};
}

}  // namespace

double Scene::param(std::size_t flat_index) const {
    auto [gi, slot] = locate(*this, flat_index);
    const auto& g = gaussians[gi];
    if (slot < 3) return g.position[slot];
    if (slot < 7) return g.rotation[slot - 3];
    if (slot < 10) return g.log_scale[slot - 7];
    if (slot == 10) return g.opacity_logit;
    return color_param(g.color, slot - kGeometryParams);
}

void Scene::set_param(std::size_t flat_index, double value) {
    auto [gi, slot] = locate(*this, flat_index);
    auto& g = gaussians[gi];
    if (slot < 3) g.position[slot] = value;
    else if (slot < 7) g.rotation[slot - 3] = value;
    else if (slot < 10) g.log_scale[slot - 7] = value;
    else if (slot == 10) g.opacity_logit = value;
    else set_color_param(g.color, slot - kGeometryParams, value);
}

Mat3 covariance(const Vec4& rotation, const Vec3& log_scale) {
    Mat3 r = quat_to_rotation(rotation);
    Mat3 m = r * Vec3(log_scale.array().exp()).asDiagonal();
    return m * m.transpose();
}

double gaussian_density(const GaussianPrimitive& g, const Vec3& x) {
    Mat3 sigma = covariance(g.rotation, g.log_scale) + 1e-9 * Mat3::Identity();
    double det = sigma.determinant();
    if (!(det > 0.0) || !std::isfinite(det))
        throw NumericError("covariance is singular after regularization");
    Vec3 delta = x - g.position;
    double mahal = delta.dot(sigma.inverse() * delta);
    return std::exp(-0.5 * mahal);
}

}  // namespace sgsplat
