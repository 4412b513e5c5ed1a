#include "sgsplat/train.hpp"

#include "sgsplat/ply.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace sgsplat {

void TrainConfig::validate() const {
    if (total_iterations < 1) throw InvalidArgument("total_iterations must be >= 1");
    // sg_start_iteration == total_iterations keeps SG frozen for the whole run.
    if (sg_start_iteration < 0 || sg_start_iteration > total_iterations)
        throw InvalidArgument("sg_start_iteration must be in [0, total_iterations]");
    if (sg_learning_rate <= 0 || position_lr <= 0 || rotation_lr <= 0 || scale_lr <= 0 ||
        opacity_lr <= 0 || diffuse_lr <= 0 || sh_lr <= 0)
        throw InvalidArgument("learning rates must be positive");
    if (lambda_dssim < 0 || lambda_dssim >= 1)
        throw InvalidArgument("lambda_dssim must be in [0, 1)");
    if (prune_opacity_floor < 0 || prune_opacity_floor >= 1)
        throw InvalidArgument("prune_opacity_floor must be in [0, 1)");
}

LossResult loss(const Image& rendered, const Image& target, double lambda_dssim) {
    if (!rendered.same_shape(target)) throw InvalidArgument("loss image dimensions do not match");
    const std::size_t n = rendered.size();
    LossResult out;
    out.upstream = Image(rendered.width, rendered.height, rendered.channels);

    // Identical images sit exactly at the loss minimum; the analytic gradient
    // is zero there. Computing the SSIM gradient anyway leaves rounding noise
    // of ~1e-17 that Adam's tiny epsilon would amplify into real steps.
    if (rendered.data == target.data) return out;

    double l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = rendered.data[i] - target.data[i];
        l1 += std::abs(d);
        out.upstream.data[i] = (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) * (1.0 - lambda_dssim) /
                               static_cast<double>(n);
    }
    l1 /= static_cast<double>(n);
    out.value = (1.0 - lambda_dssim) * l1;

    if (lambda_dssim > 0.0) {
        SsimResult s = ssim_with_grad(rendered, target);
        out.value += lambda_dssim * (1.0 - s.value);
        for (std::size_t i = 0; i < n; ++i)
            out.upstream.data[i] -= lambda_dssim * s.grad_a.data[i];
    }
    return out;
}

namespace {

enum class ParamGroup { Position, Rotation, Scale, Opacity, Diffuse, SHRest, SG };
constexpr std::size_t kNumGroups = 7;

// Group of a flattened per-Gaussian slot for the scene's (homogeneous) model.
ParamGroup group_of_slot(ColorModelKind kind, int slot, int sh_stored_coeffs) {
    if (slot < 3) return ParamGroup::Position;
    if (slot < 7) return ParamGroup::Rotation;
    if (slot < 10) return ParamGroup::Scale;
    if (slot == 10) return ParamGroup::Opacity;
    int c = slot - kGeometryParams;
    switch (kind) {
        case ColorModelKind::SHOnly:
            return c < 3 ? ParamGroup::Diffuse : ParamGroup::SHRest;
        case ColorModelKind::DiffuseSG:
            return c < 3 ? ParamGroup::Diffuse : ParamGroup::SG;
        case ColorModelKind::DiffuseOrthoSG:
            return c < 3 ? ParamGroup::Diffuse : ParamGroup::SG;
        case ColorModelKind::MixedSHSG:
            if (c < 3) return ParamGroup::Diffuse;
            return c < 3 * sh_stored_coeffs ? ParamGroup::SHRest : ParamGroup::SG;
    }
    return ParamGroup::Diffuse;
}

struct AdamState {
    std::vector<double> m, v;
    std::array<long, kNumGroups> steps{};
};

}  // namespace

TrainResult train(const Scene& initial_scene, const std::vector<TrainView>& views,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (views.empty()) throw InvalidArgument("training requires at least one view");
    if (initial_scene.gaussians.empty()) throw InvalidArgument("training requires a non-empty scene");
    initial_scene.check_homogeneous();
    for (const auto& [cam, target] : views) {
        cam.validate();
        if (target.width != cam.width || target.height != cam.height || target.channels != 3)
            throw InvalidArgument("target image does not match its camera size");
    }

    TrainResult result;
    result.scene = initial_scene;
    Scene& scene = result.scene;
    ColorModelKind kind = kind_of(scene.gaussians.front().color);
    int sh_stored = 1;
    if (kind == ColorModelKind::SHOnly)
        sh_stored = sh::coeff_count(std::get<SHOnlyModel>(scene.gaussians.front().color).sh.degree);
    if (kind == ColorModelKind::MixedSHSG)
        sh_stored = sh::coeff_count(std::get<MixedSHSGModel>(scene.gaussians.front().color).sh.degree);

    const std::size_t stride = scene.params_per_gaussian();
    std::vector<ParamGroup> slot_group(stride);
    for (std::size_t s = 0; s < stride; ++s)
        slot_group[s] = group_of_slot(kind, static_cast<int>(s), sh_stored);

    AdamState adam;
    adam.m.assign(scene.total_params(), 0.0);
    adam.v.assign(scene.total_params(), 0.0);

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(views.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t cursor = order.size();  // reshuffle on first use

    result.loss_history.reserve(static_cast<std::size_t>(cfg.total_iterations));

    for (int iter = 1; iter <= cfg.total_iterations; ++iter) {
        if (cursor >= order.size()) {
            // Fisher-Yates on the portable uniform stream.
            for (std::size_t i = order.size(); i > 1; --i) {
                std::size_t j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
                if (j >= i) j = i - 1;
                std::swap(order[i - 1], order[j]);
            }
            cursor = 0;
        }
        const TrainView& view = views[order[cursor++]];

        RenderResult rendered = render(scene, view.first, cfg.render);
        LossResult l = loss(rendered.image, view.second, cfg.lambda_dssim);
        if (!std::isfinite(l.value)) {
            if (!cfg.snapshot_path.empty()) save_ply(scene, cfg.snapshot_path, detect_layout(scene));
            throw NumericError("non-finite loss at iteration " + std::to_string(iter) +
                               (cfg.snapshot_path.empty() ? "" : "; scene dumped to " + cfg.snapshot_path));
        }
        result.loss_history.push_back(l.value);

        SceneGradients grads = backward(scene, view.first, cfg.render, l.upstream);

        const bool sg_active = iter > cfg.sg_start_iteration;
        double position_lr = cfg.position_lr;
        if (cfg.position_lr_final > 0 && cfg.position_lr_final != cfg.position_lr) {
            double t = static_cast<double>(iter) / static_cast<double>(cfg.total_iterations);
            position_lr = cfg.position_lr * std::pow(cfg.position_lr_final / cfg.position_lr, t);
        }
        const std::array<double, kNumGroups> lr = {
            position_lr, cfg.rotation_lr, cfg.scale_lr, cfg.opacity_lr,
            cfg.diffuse_lr, cfg.sh_lr, cfg.sg_learning_rate};

        std::array<bool, kNumGroups> group_stepped{};
        for (std::size_t gi = 0; gi < scene.gaussians.size(); ++gi) {
            for (std::size_t s = 0; s < stride; ++s) {
                ParamGroup group = slot_group[s];
                if (group == ParamGroup::SG && !sg_active) continue;
                group_stepped[static_cast<std::size_t>(group)] = true;
            }
            break;  // groups are identical across gaussians
        }
        std::array<long, kNumGroups> steps = adam.steps;
        for (std::size_t g = 0; g < kNumGroups; ++g)
            if (group_stepped[g]) steps[g] = adam.steps[g] + 1;

        for (std::size_t gi = 0; gi < scene.gaussians.size(); ++gi) {
            for (std::size_t s = 0; s < stride; ++s) {
                ParamGroup group = slot_group[s];
                if (group == ParamGroup::SG && !sg_active) continue;
                std::size_t flat = gi * stride + s;
                double g = grads.flat(scene, flat);
                adam.m[flat] = cfg.adam_beta1 * adam.m[flat] + (1.0 - cfg.adam_beta1) * g;
                adam.v[flat] = cfg.adam_beta2 * adam.v[flat] + (1.0 - cfg.adam_beta2) * g * g;
                long t = steps[static_cast<std::size_t>(group)];
                double m_hat = adam.m[flat] / (1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t)));
                double v_hat = adam.v[flat] / (1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t)));
                double step = lr[static_cast<std::size_t>(group)] * m_hat /
                              (std::sqrt(v_hat) + cfg.adam_eps);
                scene.set_param(flat, scene.param(flat) - step);
            }
        }
        adam.steps = steps;

        // Keep the free lobe axis on the unit sphere; its gradient lives in the
        // tangent plane, the retraction happens here.
        if (kind == ColorModelKind::DiffuseSG) {
            for (auto& g : scene.gaussians) {
                auto& m = std::get<DiffuseSGModel>(g.color);
                double n = m.mu.norm();
                if (n > 1e-12) m.mu /= n;
            }
        }

        if (cfg.prune_every > 0 && iter % cfg.prune_every == 0 && iter < cfg.total_iterations) {
            Scene pruned = prune(scene, cfg.prune_opacity_floor);
            if (pruned.gaussians.size() != scene.gaussians.size()) {
                // Filter optimizer state alongside the kept Gaussians.
                std::vector<double> m2, v2;
                m2.reserve(pruned.gaussians.size() * stride);
                v2.reserve(pruned.gaussians.size() * stride);
                std::size_t keep_cursor = 0;
                for (std::size_t gi = 0; gi < scene.gaussians.size(); ++gi) {
                    if (keep_cursor < pruned.gaussians.size() &&
                        scene.gaussians[gi].opacity() >= cfg.prune_opacity_floor) {
                        for (std::size_t s = 0; s < stride; ++s) {
                            m2.push_back(adam.m[gi * stride + s]);
                            v2.push_back(adam.v[gi * stride + s]);
                        }
                        ++keep_cursor;
                    }
                }
                // prune() may retain the single best Gaussian even if all fall
                // below the floor; rebuild state from scratch in that corner.
                if (m2.size() != pruned.gaussians.size() * stride) {
                    m2.assign(pruned.gaussians.size() * stride, 0.0);
                    v2.assign(pruned.gaussians.size() * stride, 0.0);
                }
                adam.m = std::move(m2);
                adam.v = std::move(v2);
                scene = std::move(pruned);
            }
        }

        if (cfg.checkpoint_every > 0 && !cfg.checkpoint_dir.empty() &&
            iter % cfg.checkpoint_every == 0) {
            char name[64];
            std::snprintf(name, sizeof(name), "/ckpt_%06d.ply", iter);
            save_ply(scene, cfg.checkpoint_dir + name, detect_layout(scene));
        }
    }
    return result;
}

Scene prune(const Scene& scene, double opacity_floor) {
    if (opacity_floor < 0 || opacity_floor >= 1)
        throw InvalidArgument("opacity_floor must be in [0, 1)");
    Scene out;
    out.shared_axes = scene.shared_axes;
    out.background = scene.background;
    out.gaussians.reserve(scene.gaussians.size());
    for (const auto& g : scene.gaussians)
        if (g.opacity() >= opacity_floor) out.gaussians.push_back(g);
    if (out.gaussians.empty() && !scene.gaussians.empty()) {
        auto best = std::max_element(scene.gaussians.begin(), scene.gaussians.end(),
                                     [](const GaussianPrimitive& a, const GaussianPrimitive& b) {
                                         return a.opacity_logit < b.opacity_logit;
                                     });
        out.gaussians.push_back(*best);
    }
    return out;
}

}  // namespace sgsplat
