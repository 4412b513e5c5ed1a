#pragma once

#include "sgsplat/scene.hpp"

#include <string>

namespace sgsplat {

// Checkpoint layouts. Values are 32-bit little-endian floats in both.
//
// Reference3DGS (59 floats/Gaussian, 236 bytes): x, y, z, f_dc_0..2,
// f_rest_0..44 (channel-major: 15 red, 15 green, 15 blue), opacity (logit),
// scale_0..2 (log), rot_0..3 (quaternion wxyz). nx/ny/nz are tolerated on read
// and ignored. Always degree-3 SH.
//
// SGExtended (29 floats/Gaussian, 116 bytes; +24 sh2 floats for the mixed
// model): x, y, z, f_dc_0..2, sg_alpha_{i}_{c} (lobe-major), sg_lambda_0..2
// (log sharpness), sg_mu_0..2 (free lobe axis; zero for shared-axis models),
// [sh2_0..23 channel-major bands 1-2], opacity, scale_0..2, rot_0..3.
// Header comments carry the variant ("comment sg_model sg1|sg3|mixed"), the
// shared axes and the background color.
enum class PlyLayout { Reference3DGS, SGExtended };

// Per-Gaussian stored floats for a layout/model combination.
int ply_floats_per_gaussian(PlyLayout layout, ColorModelKind kind);

// Loads a binary little-endian or ASCII PLY; the layout is detected from the
// property names. An optional "<path>.meta" sidecar (key=value lines: axes,
// background) supplements the header comments.
Scene load_ply(const std::string& path);

// Writes a canonical binary little-endian PLY. Reference3DGS requires an
// SH-only scene (lower degrees are zero-padded to degree 3); SGExtended
// requires an SG-backed scene.
void save_ply(const Scene& scene, const std::string& path, PlyLayout layout);

PlyLayout detect_layout(const Scene& scene);

}  // namespace sgsplat
