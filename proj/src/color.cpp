#include "sgsplat/color.hpp"

#include <cmath>
#include <sstream>

namespace sgsplat {

namespace {

void check_unit_direction(const Vec3& d) {
    if (std::abs(d.norm() - 1.0) > 1e-6) {
        std::ostringstream msg;
        msg << "direction must be unit length, got |d| = " << d.norm();
        throw InvalidArgument(msg.str());
    }
}

void check_degree(int degree, int max_degree) {
    if (degree < 0 || degree > max_degree) {
        std::ostringstream msg;
        msg << "unsupported SH degree " << degree << " (max " << max_degree << ")";
        throw InvalidArgument(msg.str());
    }
}

}  // namespace

SHCoeffs SHCoeffs::zeros(int degree) {
    check_degree(degree, 3);
    SHCoeffs out;
    out.degree = degree;
    out.coeffs.assign(sh::coeff_count(degree), Vec3::Zero());
    return out;
}

void validate_ortho_axes(const Mat3& axes, double tol) {
    Mat3 gram = axes * axes.transpose();
    double err = (gram - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (err > tol) {
        std::ostringstream msg;
        msg << "axis triple is not orthonormal: |A A^T - I|_max = " << err;
        throw InvalidArgument(msg.str());
    }
}

OrthoSGSet::OrthoSGSet(const std::array<SGLobe, 3>& lobes_in, const Mat3& axes_in)
    : lobes(lobes_in), axes(axes_in) {
    validate_ortho_axes(axes);
    for (int i = 0; i < 3; ++i) lobes[i].mu = axes.row(i).transpose();
}

SGLobe DiffuseSGModel::lobe() const {
    SGLobe out;
    out.alpha = alpha;
    out.lambda = std::exp(log_lambda);
    double n = mu.norm();
    out.mu = n > 1e-12 ? Vec3(mu / n) : Vec3::UnitX();
    return out;
}

SGLobe DiffuseOrthoSGModel::lobe(int i, const Mat3& axes) const {
    SGLobe out;
    out.alpha = alpha[static_cast<std::size_t>(i)];
    out.lambda = std::exp(log_lambda[static_cast<std::size_t>(i)]);
    out.mu = axes.row(i).transpose();
    return out;
}

SGLobe MixedSHSGModel::lobe(int i, const Mat3& axes) const {
    SGLobe out;
    out.alpha = alpha[static_cast<std::size_t>(i)];
    out.lambda = std::exp(log_lambda[static_cast<std::size_t>(i)]);
    out.mu = axes.row(i).transpose();
    return out;
}

ColorModelKind kind_of(const ColorModel& model) {
    return static_cast<ColorModelKind>(model.index());
}

const char* to_string(ColorModelKind kind) {
    switch (kind) {
        case ColorModelKind::SHOnly: return "sh";
        case ColorModelKind::DiffuseSG: return "sg1";
        case ColorModelKind::DiffuseOrthoSG: return "sg3";
        case ColorModelKind::MixedSHSG: return "mixed";
    }
    return "?";
}

ColorModelKind color_model_kind_from_string(const std::string& name) {
    if (name == "sh") return ColorModelKind::SHOnly;
    if (name == "sg1") return ColorModelKind::DiffuseSG;
    if (name == "sg3") return ColorModelKind::DiffuseOrthoSG;
    if (name == "mixed") return ColorModelKind::MixedSHSG;
    throw InvalidArgument("unknown color model kind: " + name);
}

std::vector<double> eval_sh_basis(const Vec3& d, int degree) {
    check_unit_direction(d);
    check_degree(degree, 3);
    const double x = d.x(), y = d.y(), z = d.z();
    std::vector<double> basis(static_cast<std::size_t>(sh::coeff_count(degree)));
    basis[0] = sh::kC0;
    if (degree >= 1) {
        basis[1] = -sh::kC1 * y;
        basis[2] = sh::kC1 * z;
        basis[3] = -sh::kC1 * x;
    }
    if (degree >= 2) {
        const double xx = x * x, yy = y * y, zz = z * z;
        basis[4] = sh::kC2[0] * x * y;
        basis[5] = sh::kC2[1] * y * z;
        basis[6] = sh::kC2[2] * (2.0 * zz - xx - yy);
        basis[7] = sh::kC2[3] * x * z;
        basis[8] = sh::kC2[4] * (xx - yy);
    }
    if (degree >= 3) {
        const double xx = x * x, yy = y * y, zz = z * z;
        basis[9] = sh::kC3[0] * y * (3.0 * xx - yy);
        basis[10] = sh::kC3[1] * x * y * z;
        basis[11] = sh::kC3[2] * y * (4.0 * zz - xx - yy);
        basis[12] = sh::kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
        basis[13] = sh::kC3[4] * x * (4.0 * zz - xx - yy);
        basis[14] = sh::kC3[5] * z * (xx - yy);
        basis[15] = sh::kC3[6] * x * (xx - 3.0 * yy);
    }
    return basis;
}

namespace {

// d(Y_i)/d(x,y,z), same ordering as eval_sh_basis. Polynomials extended off the
// sphere; the renderer projects through the normalize Jacobian afterwards.
std::vector<Vec3> sh_basis_direction_grads(const Vec3& d, int degree) {
    const double x = d.x(), y = d.y(), z = d.z();
    std::vector<Vec3> g(static_cast<std::size_t>(sh::coeff_count(degree)), Vec3::Zero());
    if (degree >= 1) {
        g[1] = Vec3(0, -sh::kC1, 0);
        g[2] = Vec3(0, 0, sh::kC1);
        g[3] = Vec3(-sh::kC1, 0, 0);
    }
    if (degree >= 2) {
        g[4] = sh::kC2[0] * Vec3(y, x, 0);
        g[5] = sh::kC2[1] * Vec3(0, z, y);
        g[6] = sh::kC2[2] * Vec3(-2 * x, -2 * y, 4 * z);
        g[7] = sh::kC2[3] * Vec3(z, 0, x);
        g[8] = sh::kC2[4] * Vec3(2 * x, -2 * y, 0);
    }
    if (degree >= 3) {
        const double xx = x * x, yy = y * y, zz = z * z;
        g[9] = sh::kC3[0] * Vec3(6 * x * y, 3 * xx - 3 * yy, 0);
        g[10] = sh::kC3[1] * Vec3(y * z, x * z, x * y);
        g[11] = sh::kC3[2] * Vec3(-2 * x * y, 4 * zz - xx - 3 * yy, 8 * y * z);
        g[12] = sh::kC3[3] * Vec3(-6 * x * z, -6 * y * z, 6 * zz - 3 * xx - 3 * yy);
        g[13] = sh::kC3[4] * Vec3(4 * zz - 3 * xx - yy, -2 * x * y, 8 * x * z);
        g[14] = sh::kC3[5] * Vec3(2 * x * z, -2 * y * z, xx - yy);
        g[15] = sh::kC3[6] * Vec3(3 * xx - 3 * yy, -6 * x * y, 0);
    }
    return g;
}

Vec3 sh_sum(const SHCoeffs& sh_coeffs, const std::vector<double>& basis, int degree_used) {
    Vec3 acc = Vec3::Zero();
    int n = sh::coeff_count(degree_used);
    for (int i = 0; i < n; ++i) acc += basis[static_cast<std::size_t>(i)] * sh_coeffs.coeffs[static_cast<std::size_t>(i)];
    return acc;
}

// Shared-axis lobe sum, written out flat for the per-Gaussian render hot path.
Vec3 ortho_lobe_sum(const std::array<Vec3, 3>& alpha, const std::array<double, 3>& log_lambda,
                    const Mat3& axes, const Vec3& d) {
    Vec3 acc = Vec3::Zero();
    for (int i = 0; i < 3; ++i) {
        double lambda = std::exp(log_lambda[static_cast<std::size_t>(i)]);
        double e = std::exp(lambda * (axes.row(i).dot(d) - 1.0));
        acc += alpha[static_cast<std::size_t>(i)] * e;
    }
    return acc;
}

int resolve_mixed_degree(const MixedSHSGModel& m, std::optional<int> override_degree) {
    if (!override_degree) return m.sh.degree;
    if (*override_degree < 0 || *override_degree > m.sh.degree) {
        std::ostringstream msg;
        msg << "sh degree override " << *override_degree << " exceeds stored degree "
            << m.sh.degree;
        throw InvalidArgument(msg.str());
    }
    return *override_degree;
}

}  // namespace

Vec3 eval_sg(const SGLobe& lobe, const Vec3& direction) {
    check_unit_direction(direction);
    double e = std::exp(lobe.lambda * (direction.dot(lobe.mu) - 1.0));
    return lobe.alpha * e;
}

Vec3 eval_color(const ColorModel& model, const Mat3& axes, const Vec3& direction,
                std::optional<int> sh_degree_override) {
    check_unit_direction(direction);
    if (sh_degree_override && kind_of(model) != ColorModelKind::MixedSHSG) {
        throw InvalidArgument("sh_degree_override is only valid for the mixed SH+SG model");
    }
    Vec3 pre = Vec3::Zero();
    switch (kind_of(model)) {
        case ColorModelKind::SHOnly: {
            const auto& m = std::get<SHOnlyModel>(model);
            auto basis = eval_sh_basis(direction, m.sh.degree);
            pre = Vec3::Constant(0.5) + sh_sum(m.sh, basis, m.sh.degree);
            break;
        }
        case ColorModelKind::DiffuseSG: {
            const auto& m = std::get<DiffuseSGModel>(model);
            pre = m.diffuse + eval_sg(m.lobe(), direction);
            break;
        }
        case ColorModelKind::DiffuseOrthoSG: {
            const auto& m = std::get<DiffuseOrthoSGModel>(model);
            pre = m.diffuse + ortho_lobe_sum(m.alpha, m.log_lambda, axes, direction);
            break;
        }
        case ColorModelKind::MixedSHSG: {
            const auto& m = std::get<MixedSHSGModel>(model);
            int deg = resolve_mixed_degree(m, sh_degree_override);
            auto basis = eval_sh_basis(direction, deg);
            pre = Vec3::Constant(0.5) + sh_sum(m.sh, basis, deg) +
                  ortho_lobe_sum(m.alpha, m.log_lambda, axes, direction);
            break;
        }
    }
    return pre.cwiseMax(0.0);
}

Vec3 eval_color(const ColorModel& model, const Vec3& direction,
                std::optional<int> sh_degree_override) {
    return eval_color(model, Mat3::Identity(), direction, sh_degree_override);
}

namespace {

// Recomputes the pre-clamp color so clamped channels contribute no gradient.
Vec3 pre_clamp_color(const ColorModel& model, const Mat3& axes, const Vec3& direction,
                     std::optional<int> override_degree) {
    switch (kind_of(model)) {
        case ColorModelKind::SHOnly: {
            const auto& m = std::get<SHOnlyModel>(model);
            auto basis = eval_sh_basis(direction, m.sh.degree);
            return Vec3::Constant(0.5) + sh_sum(m.sh, basis, m.sh.degree);
        }
        case ColorModelKind::DiffuseSG: {
            const auto& m = std::get<DiffuseSGModel>(model);
            return m.diffuse + eval_sg(m.lobe(), direction);
        }
        case ColorModelKind::DiffuseOrthoSG: {
            const auto& m = std::get<DiffuseOrthoSGModel>(model);
            return Vec3(m.diffuse + ortho_lobe_sum(m.alpha, m.log_lambda, axes, direction));
        }
        case ColorModelKind::MixedSHSG: {
            const auto& m = std::get<MixedSHSGModel>(model);
            int deg = resolve_mixed_degree(m, override_degree);
            auto basis = eval_sh_basis(direction, deg);
            return Vec3(Vec3::Constant(0.5) + sh_sum(m.sh, basis, deg) +
                        ortho_lobe_sum(m.alpha, m.log_lambda, axes, direction));
        }
    }
    return Vec3::Zero();
}

// Accumulates one lobe's contribution to the gradient record.
// Layout slice: [alpha rgb, log_lambda] starting at `base`; mu gradient is
// optional (shared-axis lobes have fixed axes).
void accumulate_lobe_grad(const SGLobe& lobe, const Vec3& direction, const Vec3& weighted,
                          std::vector<double>& params, int base, Vec3* d_mu_unit,
                          Vec3* d_direction) {
    double e = std::exp(lobe.lambda * (direction.dot(lobe.mu) - 1.0));
    double t = direction.dot(lobe.mu) - 1.0;
    // d/d alpha_c = e * w_c
    for (int c = 0; c < 3; ++c) params[static_cast<std::size_t>(base + c)] += e * weighted[c];
    // d/d log_lambda = lambda * t * e * sum_c w_c alpha_c
    double walpha = weighted.dot(lobe.alpha);
    params[static_cast<std::size_t>(base + 3)] += lobe.lambda * t * e * walpha;
    if (d_mu_unit) *d_mu_unit += lobe.lambda * e * walpha * direction;
    if (d_direction) *d_direction += lobe.lambda * e * walpha * lobe.mu;
}

}  // namespace

ColorGrad grad_color(const ColorModel& model, const Mat3& axes, const Vec3& direction,
                     const Vec3& upstream, std::optional<int> override_degree) {
    check_unit_direction(direction);
    if (override_degree && kind_of(model) != ColorModelKind::MixedSHSG) {
        throw InvalidArgument("sh_degree_override is only valid for the mixed SH+SG model");
    }
    ColorGrad grad;
    grad.params.assign(static_cast<std::size_t>(param_count(model)), 0.0);

    Vec3 pre = pre_clamp_color(model, axes, direction, override_degree);
    Vec3 w;  // upstream masked by the >= 0 clamp
    for (int c = 0; c < 3; ++c) w[c] = pre[c] >= 0.0 ? upstream[c] : 0.0;

    switch (kind_of(model)) {
        case ColorModelKind::SHOnly: {
            const auto& m = std::get<SHOnlyModel>(model);
            auto basis = eval_sh_basis(direction, m.sh.degree);
            auto dbasis = sh_basis_direction_grads(direction, m.sh.degree);
            int n = sh::coeff_count(m.sh.degree);
            for (int i = 0; i < n; ++i) {
                for (int c = 0; c < 3; ++c)
                    grad.params[static_cast<std::size_t>(3 * i + c)] = basis[static_cast<std::size_t>(i)] * w[c];
                grad.d_direction += dbasis[static_cast<std::size_t>(i)] * w.dot(m.sh.coeffs[static_cast<std::size_t>(i)]);
            }
            break;
        }
        case ColorModelKind::DiffuseSG: {
            const auto& m = std::get<DiffuseSGModel>(model);
            for (int c = 0; c < 3; ++c) grad.params[static_cast<std::size_t>(c)] = w[c];
            SGLobe lobe = m.lobe();
            Vec3 d_mu_unit = Vec3::Zero();
            accumulate_lobe_grad(lobe, direction, w, grad.params, 3, &d_mu_unit, &grad.d_direction);
            // Chain through mu = mu_raw / |mu_raw|: project to the tangent plane and
            // scale by 1/|mu_raw|.
            double n = m.mu.norm();
            Vec3 mu_hat = lobe.mu;
            Vec3 d_mu_raw = (d_mu_unit - mu_hat * mu_hat.dot(d_mu_unit)) / (n > 1e-12 ? n : 1.0);
            for (int c = 0; c < 3; ++c) grad.params[static_cast<std::size_t>(7 + c)] = d_mu_raw[c];
            break;
        }
        case ColorModelKind::DiffuseOrthoSG: {
            const auto& m = std::get<DiffuseOrthoSGModel>(model);
            for (int c = 0; c < 3; ++c) grad.params[static_cast<std::size_t>(c)] = w[c];
            for (int i = 0; i < 3; ++i) {
                accumulate_lobe_grad(m.lobe(i, axes), direction, w, grad.params, 3 + 4 * i,
                                     nullptr, &grad.d_direction);
            }
            break;
        }
        case ColorModelKind::MixedSHSG: {
            const auto& m = std::get<MixedSHSGModel>(model);
            int deg = resolve_mixed_degree(m, override_degree);
            auto basis = eval_sh_basis(direction, deg);
            auto dbasis = sh_basis_direction_grads(direction, deg);
            int n_active = sh::coeff_count(deg);
            int n_stored = sh::coeff_count(m.sh.degree);
            for (int i = 0; i < n_active; ++i) {
                for (int c = 0; c < 3; ++c)
                    grad.params[static_cast<std::size_t>(3 * i + c)] = basis[static_cast<std::size_t>(i)] * w[c];
                grad.d_direction += dbasis[static_cast<std::size_t>(i)] * w.dot(m.sh.coeffs[static_cast<std::size_t>(i)]);
            }
            for (int i = 0; i < 3; ++i) {
                accumulate_lobe_grad(m.lobe(i, axes), direction, w, grad.params,
                                     3 * n_stored + 4 * i, nullptr, &grad.d_direction);
            }
            break;
        }
    }
    return grad;
}

int param_count(const ColorModel& model) {
    switch (kind_of(model)) {
        case ColorModelKind::SHOnly:
            return 3 * sh::coeff_count(std::get<SHOnlyModel>(model).sh.degree);
        case ColorModelKind::DiffuseSG:
            return 10;
        case ColorModelKind::DiffuseOrthoSG:
            return 15;
        case ColorModelKind::MixedSHSG:
            return 3 * sh::coeff_count(std::get<MixedSHSGModel>(model).sh.degree) + 12;
    }
    return 0;
}

int param_count(ColorModelKind kind, int sh_degree) {
    switch (kind) {
        case ColorModelKind::SHOnly:
            check_degree(sh_degree, 3);
            return 3 * sh::coeff_count(sh_degree);
        case ColorModelKind::DiffuseSG:
            return 10;
        case ColorModelKind::DiffuseOrthoSG:
            return 15;
        case ColorModelKind::MixedSHSG:
            check_degree(sh_degree, 2);
            return 3 * sh::coeff_count(sh_degree) + 12;
    }
    return 0;
}

int shared_param_count(ColorModelKind kind) {
    switch (kind) {
        case ColorModelKind::SHOnly:
        case ColorModelKind::DiffuseSG:
            return 0;
        case ColorModelKind::DiffuseOrthoSG:
        case ColorModelKind::MixedSHSG:
            return 3;  // one rotation fixing the shared axis triple
    }
    return 0;
}

namespace {

[[noreturn]] void bad_index(int index) {
    std::ostringstream msg;
    msg << "color parameter index " << index << " out of range";
    throw InvalidArgument(msg.str());
}

}  // namespace

double color_param(const ColorModel& model, int index) {
    if (index < 0 || index >= param_count(model)) bad_index(index);
    auto i = static_cast<std::size_t>(index);
    switch (kind_of(model)) {
        case ColorModelKind::SHOnly: {
            const auto& m = std::get<SHOnlyModel>(model);
            return m.sh.coeffs[i / 3][static_cast<int>(i % 3)];
        }
        case ColorModelKind::DiffuseSG: {
            const auto& m = std::get<DiffuseSGModel>(model);
            if (i < 3) return m.diffuse[static_cast<int>(i)];
            if (i < 6) return m.alpha[static_cast<int>(i - 3)];
            if (i == 6) return m.log_lambda;
            return m.mu[static_cast<int>(i - 7)];
        }
        case ColorModelKind::DiffuseOrthoSG: {
            const auto& m = std::get<DiffuseOrthoSGModel>(model);
            if (i < 3) return m.diffuse[static_cast<int>(i)];
            std::size_t k = i - 3, lobe = k / 4, slot = k % 4;
            return slot < 3 ? m.alpha[lobe][static_cast<int>(slot)] : m.log_lambda[lobe];
        }
        case ColorModelKind::MixedSHSG: {
            const auto& m = std::get<MixedSHSGModel>(model);
            std::size_t n_sh = static_cast<std::size_t>(3 * sh::coeff_count(m.sh.degree));
            if (i < n_sh) return m.sh.coeffs[i / 3][static_cast<int>(i % 3)];
            std::size_t k = i - n_sh, lobe = k / 4, slot = k % 4;
            return slot < 3 ? m.alpha[lobe][static_cast<int>(slot)] : m.log_lambda[lobe];
        }
    }
    bad_index(index);
}

void set_color_param(ColorModel& model, int index, double value) {
    if (index < 0 || index >= param_count(model)) bad_index(index);
    auto i = static_cast<std::size_t>(index);
    switch (kind_of(model)) {
        case ColorModelKind::SHOnly: {
            auto& m = std::get<SHOnlyModel>(model);
            m.sh.coeffs[i / 3][static_cast<int>(i % 3)] = value;
            return;
        }
        case ColorModelKind::DiffuseSG: {
            auto& m = std::get<DiffuseSGModel>(model);
            if (i < 3) m.diffuse[static_cast<int>(i)] = value;
            else if (i < 6) m.alpha[static_cast<int>(i - 3)] = value;
            else if (i == 6) m.log_lambda = value;
            else m.mu[static_cast<int>(i - 7)] = value;
            return;
        }
        case ColorModelKind::DiffuseOrthoSG: {
            auto& m = std::get<DiffuseOrthoSGModel>(model);
            if (i < 3) { m.diffuse[static_cast<int>(i)] = value; return; }
            std::size_t k = i - 3, lobe = k / 4, slot = k % 4;
            if (slot < 3) m.alpha[lobe][static_cast<int>(slot)] = value;
            else m.log_lambda[lobe] = value;
            return;
        }
        case ColorModelKind::MixedSHSG: {
            auto& m = std::get<MixedSHSGModel>(model);
            std::size_t n_sh = static_cast<std::size_t>(3 * sh::coeff_count(m.sh.degree));
            if (i < n_sh) { m.sh.coeffs[i / 3][static_cast<int>(i % 3)] = value; return; }
            std::size_t k = i - n_sh, lobe = k / 4, slot = k % 4;
            if (slot < 3) m.alpha[lobe][static_cast<int>(slot)] = value;
            else m.log_lambda[lobe] = value;
            return;
        }
    }
}

}  // namespace sgsplat
