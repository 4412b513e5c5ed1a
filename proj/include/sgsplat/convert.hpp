#pragma once

#include "sgsplat/ply.hpp"

#include <functional>
#include <string>
#include <vector>

namespace sgsplat {

// Quasi-uniform unit directions (Fibonacci lattice), optionally rotated.
std::vector<Vec3> fibonacci_sphere(int count, const Mat3& rotation = Mat3::Identity());

// Deterministic rotation derived from a seed; fixes the sample lattice.
Mat3 seeded_rotation(std::uint64_t seed);

struct FitOptions {
    int samples = 256;        // training directions (>= 64)
    int iters = 4;            // coordinate-descent sweeps
    std::uint64_t seed = 0;   // rotates the sample lattice
    double lambda_max = 50.0; // sharpness search bound
    double ridge = 1e-8;      // fallback regularizer for ill-conditioned solves
};

struct FitResult {
    ColorModel model;
    double rmse = 0.0;                  // over the disjoint validation lattice
    std::vector<double> train_history;  // train RMSE after each sweep
    bool used_ridge = false;
};

// Least-squares fit of `target` to an arbitrary radiance function, alternating
// a closed-form solve of the linear parameters (diffuse/alpha/SH) with a
// bracketed 1D search over each lobe sharpness. The free lobe axis of the
// single-SG model is seeded from a candidate scan and refined by projected
// gradient steps.
FitResult fit_to_function(const std::function<Vec3(const Vec3&)>& radiance,
                          ColorModelKind target, const Mat3& axes, const FitOptions& opts);

// Same, with the target decoded from degree-3 SH coefficients
// (max clamp excluded from the objective; both sides clamp at render time).
FitResult fit_sg_to_sh(const SHCoeffs& sh_coeffs, ColorModelKind target, const Mat3& axes,
                       const FitOptions& opts);

struct ConvertOptions {
    ColorModelKind target = ColorModelKind::DiffuseOrthoSG;
    FitOptions fit;
    Mat3 axes = Mat3::Identity();  // shared lobe axes of the output scene
    int threads = 0;
};

struct ConvertSummary {
    std::size_t num_gaussians = 0;
    std::uint64_t input_payload_bytes = 0;   // gaussian data only, headers excluded
    std::uint64_t output_payload_bytes = 0;
    std::uint64_t input_file_bytes = 0;
    std::uint64_t output_file_bytes = 0;
    double payload_ratio = 0.0;
    double reduction_percent = 0.0;
    double rmse_mean = 0.0;
    double rmse_max = 0.0;
    std::vector<double> histogram_edges;      // 17 edges for 16 bins
    std::vector<std::size_t> histogram_counts;
    std::vector<double> per_gaussian_rmse;
    double psnr_vs_input = -1.0;              // filled by callers that render both scenes
};

// Reads a Reference3DGS checkpoint, fits every Gaussian's color model
// (in parallel, results in input order), writes the SGExtended checkpoint.
// target == SHOnly means degree-2 truncation (the low-degree-SH baseline) and
// writes a Reference3DGS file with zeroed band-3 coefficients.
ConvertSummary convert_checkpoint(const std::string& in_path, const std::string& out_path,
                                  const ConvertOptions& opts);

// <prefix>.csv gets one rmse row per Gaussian; <prefix>.json the summary record.
void write_convert_report(const ConvertSummary& summary, const std::string& prefix);

}  // namespace sgsplat
