#include "sgsplat/synth.hpp"

#include <cmath>

namespace sgsplat {

namespace {

// The volatile store keeps the vectorizer from eliding the narrowing round trip.
double f32(double v) {
    volatile float f = static_cast<float>(v);
    return static_cast<double>(f);
}

Vec3 f32(const Vec3& v) { return Vec3(f32(v[0]), f32(v[1]), f32(v[2])); }

int band_of(int index) {
    if (index == 0) return 0;
    if (index < 4) return 1;
    if (index < 9) return 2;
    return 3;
}

}  // namespace

Scene make_synthetic_scene(std::size_t count, std::uint64_t seed, const SynthOptions& opts) {
    std::mt19937_64 gen(seed);
    Scene scene;
    scene.gaussians.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        GaussianPrimitive g;
        g.position = f32(opts.cluster_radius * std::cbrt(uniform01(gen)) * random_unit_vector(gen));
        Vec4 q = random_unit_quaternion(gen);
        g.rotation = Vec4(f32(q[0]), f32(q[1]), f32(q[2]), f32(q[3]));
        g.log_scale = f32(Vec3(uniform_range(gen, opts.log_scale_min, opts.log_scale_max),
                               uniform_range(gen, opts.log_scale_min, opts.log_scale_max),
                               uniform_range(gen, opts.log_scale_min, opts.log_scale_max)));
        g.opacity_logit = f32(logit(uniform_range(gen, opts.opacity_min, opts.opacity_max)));

        Vec3 base(uniform_range(gen, opts.base_color_min, opts.base_color_max),
                  uniform_range(gen, opts.base_color_min, opts.base_color_max),
                  uniform_range(gen, opts.base_color_min, opts.base_color_max));

        switch (opts.kind) {
            case ColorModelKind::SHOnly: {
                SHOnlyModel m{SHCoeffs::zeros(opts.sh_degree)};
                // DC chosen so the decoded base color lands in the requested range.
                m.sh.coeffs[0] = f32((base - Vec3::Constant(0.5)) / sh::kC0);
                for (int k = 1; k < sh::coeff_count(opts.sh_degree); ++k) {
                    double amp = opts.band_amplitude * std::pow(opts.band_decay, band_of(k));
                    m.sh.coeffs[static_cast<std::size_t>(k)] =
                        f32(Vec3(uniform_range(gen, -amp, amp), uniform_range(gen, -amp, amp),
                                 uniform_range(gen, -amp, amp)));
                }
                g.color = std::move(m);
                break;
            }
            case ColorModelKind::DiffuseSG: {
                DiffuseSGModel m;
                m.diffuse = f32(base);
                double amp = opts.sg_alpha_amplitude;
                m.alpha = f32(Vec3(uniform_range(gen, -amp, amp), uniform_range(gen, -amp, amp),
                                   uniform_range(gen, -amp, amp)));
                m.log_lambda = f32(uniform_range(gen, -0.5, 1.5));
                m.mu = f32(random_unit_vector(gen));
                g.color = std::move(m);
                break;
            }
            case ColorModelKind::DiffuseOrthoSG: {
                DiffuseOrthoSGModel m;
                m.diffuse = f32(base);
                for (int l = 0; l < 3; ++l) {
                    double amp = opts.sg_alpha_amplitude;
                    m.alpha[static_cast<std::size_t>(l)] =
                        f32(Vec3(uniform_range(gen, -amp, amp), uniform_range(gen, -amp, amp),
                                 uniform_range(gen, -amp, amp)));
                    m.log_lambda[static_cast<std::size_t>(l)] = f32(uniform_range(gen, -0.5, 1.5));
                }
                g.color = std::move(m);
                break;
            }
            case ColorModelKind::MixedSHSG: {
                MixedSHSGModel m;
                m.sh = SHCoeffs::zeros(2);
                m.sh.coeffs[0] = f32((base - Vec3::Constant(0.5)) / sh::kC0);
                for (int k = 1; k < 9; ++k) {
                    double amp = opts.band_amplitude * std::pow(opts.band_decay, band_of(k));
                    m.sh.coeffs[static_cast<std::size_t>(k)] =
                        f32(Vec3(uniform_range(gen, -amp, amp), uniform_range(gen, -amp, amp),
                                 uniform_range(gen, -amp, amp)));
                }
                for (int l = 0; l < 3; ++l) {
                    double amp = opts.sg_alpha_amplitude;
                    m.alpha[static_cast<std::size_t>(l)] =
                        f32(Vec3(uniform_range(gen, -amp, amp), uniform_range(gen, -amp, amp),
                                 uniform_range(gen, -amp, amp)));
                    m.log_lambda[static_cast<std::size_t>(l)] = f32(uniform_range(gen, -0.5, 1.5));
                }
                g.color = std::move(m);
                break;
            }
        }
        scene.gaussians.push_back(std::move(g));
    }
    return scene;
}

std::vector<Camera> make_orbit_cameras(int count, int width, int height, double distance,
                                       double focal, double elevation) {
    std::vector<Camera> cams;
    cams.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        double angle = 2.0 * M_PI * i / count;
        cams.push_back(make_orbit_camera(Vec3::Zero(), distance, angle, elevation, width, height,
                                         focal));
    }
    return cams;
}

}  // namespace sgsplat
