#pragma once

#include "sgsplat/camera.hpp"
#include "sgsplat/scene.hpp"

#include <vector>

namespace sgsplat {

struct SynthOptions {
    ColorModelKind kind = ColorModelKind::SHOnly;
    int sh_degree = 3;            // SHOnly only; mixed always stores degree 2
    double cluster_radius = 1.0;  // positions drawn inside this ball
    double log_scale_min = -4.5;
    double log_scale_max = -2.5;
    double opacity_min = 0.3;
    double opacity_max = 0.95;
    // Base (view-independent) color range and the band-l coefficient amplitude
    // band_amplitude * band_decay^l for view-dependent terms.
    double base_color_min = 0.25;
    double base_color_max = 0.75;
    double band_amplitude = 0.25;
    double band_decay = 0.55;
    double sg_alpha_amplitude = 0.15;  // SG-backed models
};

// Deterministic random scene around the origin. All parameters are rounded
// through float32 so checkpoints round-trip bit-exactly.
Scene make_synthetic_scene(std::size_t count, std::uint64_t seed, const SynthOptions& opts = {});

// Ring of cameras looking at the origin-centered cluster.
std::vector<Camera> make_orbit_cameras(int count, int width, int height, double distance,
                                       double focal, double elevation = 0.35);

}  // namespace sgsplat
