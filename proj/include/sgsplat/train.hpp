#pragma once

#include "sgsplat/camera.hpp"
#include "sgsplat/grad.hpp"
#include "sgsplat/metrics.hpp"

#include <string>
#include <utility>
#include <vector>

namespace sgsplat {

struct TrainConfig {
    int total_iterations = 30000;
    // SG amplitudes and sharpness stay frozen at their initialization until this
    // iteration, then train at sg_learning_rate.
    int sg_start_iteration = 2000;
    double sg_learning_rate = 0.0025;

    double position_lr = 1.6e-4;
    double position_lr_final = 1.6e-6;  // exponential decay target; set equal for constant
    double rotation_lr = 1e-3;
    double scale_lr = 5e-3;
    double opacity_lr = 0.05;
    double diffuse_lr = 0.0025;   // diffuse / SH DC coefficients
    double sh_lr = 0.000125;      // SH bands >= 1

    double lambda_dssim = 0.2;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-15;

    int prune_every = 0;          // 0 disables pruning
    double prune_opacity_floor = 0.005;

    int checkpoint_every = 0;     // 0 disables checkpoints
    std::string checkpoint_dir;
    std::string snapshot_path;    // scene dump on non-finite loss

    std::uint64_t seed = 0;
    RenderConfig render;

    void validate() const;
};

struct LossResult {
    double value = 0.0;
    Image upstream;  // d(loss)/d(rendered)
};

// (1 - lambda) * L1 + lambda * (1 - SSIM), both means over pixels and channels.
LossResult loss(const Image& rendered, const Image& target, double lambda_dssim = 0.2);

using TrainView = std::pair<Camera, Image>;

struct TrainResult {
    Scene scene;
    std::vector<double> loss_history;  // one entry per iteration
};

// Adam-style optimization of every stored parameter against the target views,
// cycling views in seeded-shuffled order. Deterministic for a fixed config.
TrainResult train(const Scene& scene, const std::vector<TrainView>& views, const TrainConfig& cfg);

// Drops Gaussians whose activated opacity falls below the floor; always keeps
// at least one Gaussian.
Scene prune(const Scene& scene, double opacity_floor);

}  // namespace sgsplat
