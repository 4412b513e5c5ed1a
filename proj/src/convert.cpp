#include "sgsplat/convert.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace sgsplat {

std::vector<Vec3> fibonacci_sphere(int count, const Mat3& rotation) {
    if (count < 1) throw InvalidArgument("direction count must be >= 1");
    std::vector<Vec3> dirs(static_cast<std::size_t>(count));
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    for (int i = 0; i < count; ++i) {
        double z = 1.0 - 2.0 * (i + 0.5) / count;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = 2.0 * M_PI * static_cast<double>(i) / golden;
        Vec3 d(r * std::cos(phi), r * std::sin(phi), z);
        dirs[static_cast<std::size_t>(i)] = (rotation * d).normalized();
    }
    return dirs;
}

Mat3 seeded_rotation(std::uint64_t seed) {
    std::mt19937_64 gen(seed ^ 0x5eed5eedULL);
    return quat_to_rotation(random_unit_quaternion(gen));
}

namespace {

struct FitProblem {
    std::vector<Vec3> train_dirs, val_dirs;
    // Row-major target values, train then validation, with the SH 0.5 offset
    // already removed for SH-backed targets.
    std::vector<Vec3> train_y, val_y;
};

// Columns of the per-channel linear system for the current sharpness values.
struct Design {
    int cols = 0;
    std::vector<double> a;  // samples x cols, row-major

    double& at(std::size_t row, int col) { return a[row * static_cast<std::size_t>(cols) + static_cast<std::size_t>(col)]; }
    double at(std::size_t row, int col) const { return a[row * static_cast<std::size_t>(cols) + static_cast<std::size_t>(col)]; }
};

struct LinearFit {
    Eigen::MatrixXd weights;  // cols x 3 (one column per channel)
    double mse = 0.0;
    bool used_ridge = false;
};

LinearFit solve_linear(const Design& design, const std::vector<Vec3>& y, double ridge) {
    const std::size_t n = y.size();
    const int k = design.cols;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(k, 3);
    for (std::size_t row = 0; row < n; ++row) {
        for (int i = 0; i < k; ++i) {
            double ai = design.at(row, i);
            for (int j = i; j < k; ++j) gram(i, j) += ai * design.at(row, j);
            for (int c = 0; c < 3; ++c) rhs(i, c) += ai * y[row][c];
        }
    }
    gram = gram.selfadjointView<Eigen::Upper>();

    LinearFit fit;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    fit.weights = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !fit.weights.allFinite()) {
        fit.used_ridge = true;
        Eigen::MatrixXd reg = gram + ridge * Eigen::MatrixXd::Identity(k, k);
        fit.weights = reg.ldlt().solve(rhs);
    }
    double se = 0.0;
    for (std::size_t row = 0; row < n; ++row) {
        for (int c = 0; c < 3; ++c) {
            double pred = 0.0;
            for (int i = 0; i < k; ++i) pred += design.at(row, i) * fit.weights(i, c);
            double d = pred - y[row][c];
            se += d * d;
        }
    }
    fit.mse = se / (3.0 * static_cast<double>(n));
    return fit;
}

// Number of SH columns (0 for the diffuse models), then one column per lobe.
struct TargetShape {
    int sh_cols = 0;   // includes the constant column for diffuse models
    int lobes = 0;
    bool free_axis = false;
};

TargetShape shape_of(ColorModelKind target) {
    switch (target) {
        case ColorModelKind::DiffuseSG: return {1, 1, true};
        case ColorModelKind::DiffuseOrthoSG: return {1, 3, false};
        case ColorModelKind::MixedSHSG: return {9, 3, false};
        case ColorModelKind::SHOnly: return {9, 0, false};
    }
    return {};
}

void fill_base_columns(Design& design, const std::vector<Vec3>& dirs, ColorModelKind target) {
    TargetShape shape = shape_of(target);
    for (std::size_t row = 0; row < dirs.size(); ++row) {
        if (shape.sh_cols == 1) {
            design.at(row, 0) = 1.0;
        } else {
            auto basis = eval_sh_basis(dirs[row], 2);
            for (int i = 0; i < 9; ++i) design.at(row, i) = basis[static_cast<std::size_t>(i)];
        }
    }
}

void fill_lobe_column(Design& design, const std::vector<Vec3>& dirs, int col, double lambda,
                      const Vec3& mu) {
    for (std::size_t row = 0; row < dirs.size(); ++row)
        design.at(row, col) = std::exp(lambda * (dirs[row].dot(mu) - 1.0));
}

// MSE of the channel-decoupled problem after re-solving the linear part.
double reduced_mse(Design& design, const FitProblem& prob, ColorModelKind target,
                   const std::vector<double>& lambdas, const std::vector<Vec3>& mus, double ridge,
                   LinearFit* out_fit) {
    TargetShape shape = shape_of(target);
    for (int i = 0; i < shape.lobes; ++i)
        fill_lobe_column(design, prob.train_dirs, shape.sh_cols + i, lambdas[static_cast<std::size_t>(i)],
                         mus[static_cast<std::size_t>(i)]);
    LinearFit fit = solve_linear(design, prob.train_y, ridge);
    if (out_fit) *out_fit = fit;
    return fit.mse;
}

// Bracketed scan plus golden-section refinement of one lobe's sharpness.
double search_lambda(Design& design, const FitProblem& prob, ColorModelKind target,
                     std::vector<double>& lambdas, const std::vector<Vec3>& mus, int lobe,
                     double lambda_max, double ridge) {
    auto eval = [&](double lam) {
        lambdas[static_cast<std::size_t>(lobe)] = lam;
        return reduced_mse(design, prob, target, lambdas, mus, ridge, nullptr);
    };
    constexpr int kGrid = 9;
    double best_lambda = 0.0, best_mse = eval(0.0);
    std::array<double, kGrid> grid{};
    grid[0] = 0.0;
    for (int i = 1; i < kGrid; ++i)
        grid[static_cast<std::size_t>(i)] = lambda_max * std::pow(2.0, i - (kGrid - 1));
    for (int i = 1; i < kGrid; ++i) {
        double m = eval(grid[static_cast<std::size_t>(i)]);
        if (m < best_mse) {
            best_mse = m;
            best_lambda = grid[static_cast<std::size_t>(i)];
        }
    }
    // Golden-section around the winning bracket.
    double lo = 0.0, hi = lambda_max;
    for (int i = 0; i < kGrid; ++i) {
        if (grid[static_cast<std::size_t>(i)] == best_lambda) {
            lo = i > 0 ? grid[static_cast<std::size_t>(i - 1)] : 0.0;
            hi = i + 1 < kGrid ? grid[static_cast<std::size_t>(i + 1)] : lambda_max;
            break;
        }
    }
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = eval(x1), f2 = eval(x2);
    for (int it = 0; it < 16; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
        }
    }
    if (f1 < best_mse) {
        best_mse = f1;
        best_lambda = x1;
    }
    if (f2 < best_mse) {
        best_mse = f2;
        best_lambda = x2;
    }
    lambdas[static_cast<std::size_t>(lobe)] = best_lambda;
    return best_mse;
}

// Projected-gradient refinement of the free lobe axis (single-SG model only).
// Accepts a step only when the re-solved objective improves.
double refine_mu(Design& design, const FitProblem& prob, std::vector<double>& lambdas,
                 std::vector<Vec3>& mus, double current_mse, double ridge) {
    constexpr int kSteps = 12;
    for (int step = 0; step < kSteps; ++step) {
        LinearFit fit;
        reduced_mse(design, prob, ColorModelKind::DiffuseSG, lambdas, mus, ridge, &fit);
        const double lambda = lambdas[0];
        const Vec3 mu = mus[0];
        Vec3 alpha(fit.weights(1, 0), fit.weights(1, 1), fit.weights(1, 2));
        Vec3 diffuse(fit.weights(0, 0), fit.weights(0, 1), fit.weights(0, 2));
        Vec3 grad = Vec3::Zero();
        const double n = static_cast<double>(prob.train_dirs.size());
        for (std::size_t row = 0; row < prob.train_dirs.size(); ++row) {
            const Vec3& d = prob.train_dirs[row];
            double e = std::exp(lambda * (d.dot(mu) - 1.0));
            Vec3 resid = diffuse + alpha * e - prob.train_y[row];
            grad += (2.0 / (3.0 * n)) * resid.dot(alpha) * lambda * e * d;
        }
        grad -= mu * mu.dot(grad);
        double gnorm = grad.norm();
        if (gnorm < 1e-14) break;
        bool accepted = false;
        for (double scale : {1.0, 0.25, 0.05, 0.01}) {
            Vec3 trial = (mu - scale / std::max(gnorm, 1e-9) * grad * std::min(gnorm, 1.0)).normalized();
            mus[0] = trial;
            double mse = reduced_mse(design, prob, ColorModelKind::DiffuseSG, lambdas, mus, ridge, nullptr);
            if (mse < current_mse - 1e-18) {
                current_mse = mse;
                accepted = true;
                break;
            }
            mus[0] = mu;
        }
        if (!accepted) break;
    }
    return current_mse;
}

struct CoreFit {
    LinearFit linear;
    std::vector<double> lambdas;
    std::vector<Vec3> mus;
    std::vector<double> history;  // train RMSE after each sweep
};

// Coordinate descent over the lobe sharpness values (and the free axis, when
// present) with closed-form inner solves of the linear parameters.
CoreFit run_core_fit(const FitProblem& prob, ColorModelKind target, const Mat3& axes,
                     const FitOptions& opts) {
    TargetShape shape = shape_of(target);
    Design design;
    design.cols = shape.sh_cols + shape.lobes;
    design.a.assign(prob.train_dirs.size() * static_cast<std::size_t>(design.cols), 0.0);
    fill_base_columns(design, prob.train_dirs, target);

    CoreFit core;
    core.lambdas.assign(static_cast<std::size_t>(std::max(shape.lobes, 1)), 1.0);
    if (shape.free_axis) {
        core.mus = {Vec3::UnitX()};
    } else {
        for (int i = 0; i < 3; ++i) core.mus.push_back(axes.row(i).transpose());
    }

    if (shape.lobes == 0) {
        double mse = reduced_mse(design, prob, target, {}, {}, opts.ridge, &core.linear);
        core.history.push_back(std::sqrt(mse));
        return core;
    }

    if (shape.free_axis) {
        // Seed the axis with the best of a coarse candidate scan.
        auto candidates = fibonacci_sphere(32);
        double best = std::numeric_limits<double>::infinity();
        Vec3 best_mu = Vec3::UnitX();
        double best_lambda = 1.0;
        for (const Vec3& cand : candidates) {
            core.mus[0] = cand;
            std::vector<double> trial_lambda = {1.0};
            double m = search_lambda(design, prob, target, trial_lambda, core.mus, 0,
                                     opts.lambda_max, opts.ridge);
            if (m < best) {
                best = m;
                best_mu = cand;
                best_lambda = trial_lambda[0];
            }
        }
        core.mus[0] = best_mu;
        core.lambdas[0] = best_lambda;
    }
    double mse = reduced_mse(design, prob, target, core.lambdas, core.mus, opts.ridge, &core.linear);
    for (int sweep = 0; sweep < opts.iters; ++sweep) {
        for (int lobe = 0; lobe < shape.lobes; ++lobe) {
            double m = search_lambda(design, prob, target, core.lambdas, core.mus, lobe,
                                     opts.lambda_max, opts.ridge);
            mse = std::min(mse, m);
        }
        if (shape.free_axis) mse = refine_mu(design, prob, core.lambdas, core.mus, mse, opts.ridge);
        core.history.push_back(std::sqrt(mse));
    }
    reduced_mse(design, prob, target, core.lambdas, core.mus, opts.ridge, &core.linear);
    return core;
}

// Sharpness is stored as a log; exactly flat lobes get a tiny positive
// sharpness to stay representable.
double log_lambda_of(double lam) { return std::log(std::max(lam, 1e-8)); }

// Model value without the >= 0 clamp and without the SH 0.5 offset, matching
// the offset-removed objective the fits run on.
Vec3 unclamped_offsetless_eval(const ColorModel& model, const Mat3& axes, const Vec3& d) {
    switch (kind_of(model)) {
        case ColorModelKind::SHOnly: {
            const auto& m = std::get<SHOnlyModel>(model);
            auto basis = eval_sh_basis(d, m.sh.degree);
            Vec3 acc = Vec3::Zero();
            for (std::size_t i = 0; i < basis.size(); ++i) acc += basis[i] * m.sh.coeffs[i];
            return acc;
        }
        case ColorModelKind::DiffuseSG: {
            const auto& m = std::get<DiffuseSGModel>(model);
            return Vec3(m.diffuse + eval_sg(m.lobe(), d));
        }
        case ColorModelKind::DiffuseOrthoSG: {
            const auto& m = std::get<DiffuseOrthoSGModel>(model);
            Vec3 acc = m.diffuse;
            for (int i = 0; i < 3; ++i) acc += eval_sg(m.lobe(i, axes), d);
            return acc;
        }
        case ColorModelKind::MixedSHSG: {
            const auto& m = std::get<MixedSHSGModel>(model);
            auto basis = eval_sh_basis(d, m.sh.degree);
            Vec3 acc = Vec3::Zero();
            for (std::size_t i = 0; i < basis.size(); ++i) acc += basis[i] * m.sh.coeffs[i];
            for (int i = 0; i < 3; ++i) acc += eval_sg(m.lobe(i, axes), d);
            return acc;
        }
    }
    return Vec3::Zero();
}

double validation_rmse(const FitProblem& prob, const ColorModel& model, const Mat3& axes) {
    double se = 0.0;
    for (std::size_t row = 0; row < prob.val_dirs.size(); ++row) {
        Vec3 pred = unclamped_offsetless_eval(model, axes, prob.val_dirs[row]);
        se += (pred - prob.val_y[row]).squaredNorm();
    }
    return std::sqrt(se / (3.0 * static_cast<double>(prob.val_dirs.size())));
}

FitResult fit_impl(const FitProblem& prob, ColorModelKind target, const Mat3& axes,
                   const FitOptions& opts) {
    FitResult result;

    if (target == ColorModelKind::MixedSHSG) {
        // Staged fit: lobes plus diffuse first (identical to the ortho-SG fit),
        // then degree-2 SH bands on the residual. The lobes keep the
        // view-dependent load, so truncating the SH part at render time can
        // never drop the mixed model below the pure ortho-SG fit.
        CoreFit core = run_core_fit(prob, ColorModelKind::DiffuseOrthoSG, axes, opts);

        MixedSHSGModel m;
        m.sh = SHCoeffs::zeros(2);
        Vec3 diffuse(core.linear.weights(0, 0), core.linear.weights(0, 1), core.linear.weights(0, 2));
        m.sh.coeffs[0] = diffuse / sh::kC0;  // mixed decodes 0.5 + C0 c00; stage 1 fit y - 0.5
        for (int i = 0; i < 3; ++i) {
            m.alpha[static_cast<std::size_t>(i)] = Vec3(core.linear.weights(1 + i, 0), core.linear.weights(1 + i, 1),
                                                        core.linear.weights(1 + i, 2));
            m.log_lambda[static_cast<std::size_t>(i)] = log_lambda_of(core.lambdas[static_cast<std::size_t>(i)]);
        }

        // Residual fit of bands 1-2 (8 basis functions, channel-decoupled).
        Eigen::MatrixXd a(prob.train_dirs.size(), 8);
        Eigen::MatrixXd r(prob.train_dirs.size(), 3);
        for (std::size_t row = 0; row < prob.train_dirs.size(); ++row) {
            auto basis = eval_sh_basis(prob.train_dirs[row], 2);
            for (int k = 0; k < 8; ++k) a(static_cast<Eigen::Index>(row), k) = basis[static_cast<std::size_t>(k + 1)];
            Vec3 stage1 = diffuse;
            for (int i = 0; i < 3; ++i)
                stage1 += eval_sg(SGLobe{m.alpha[static_cast<std::size_t>(i)],
                                         core.lambdas[static_cast<std::size_t>(i)],
                                         core.mus[static_cast<std::size_t>(i)]},
                                  prob.train_dirs[row]);
            r.row(static_cast<Eigen::Index>(row)) = (prob.train_y[row] - stage1).transpose();
        }
        Eigen::MatrixXd gram = a.transpose() * a;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
        Eigen::MatrixXd w = ldlt.solve(a.transpose() * r);
        if (ldlt.info() != Eigen::Success || !w.allFinite()) {
            result.used_ridge = true;
            w = (gram + opts.ridge * Eigen::MatrixXd::Identity(8, 8)).ldlt().solve(a.transpose() * r);
        }
        for (int k = 0; k < 8; ++k)
            m.sh.coeffs[static_cast<std::size_t>(k + 1)] = Vec3(w(k, 0), w(k, 1), w(k, 2));

        result.model = m;
        result.used_ridge = result.used_ridge || core.linear.used_ridge;
        result.train_history = std::move(core.history);
        // Appending the post-residual train RMSE keeps the history monotone:
        // the band fit can only reduce the training error.
        double se = 0.0;
        for (std::size_t row = 0; row < prob.train_dirs.size(); ++row) {
            Vec3 pred = unclamped_offsetless_eval(result.model, axes, prob.train_dirs[row]);
            se += (pred - prob.train_y[row]).squaredNorm();
        }
        result.train_history.push_back(std::sqrt(se / (3.0 * static_cast<double>(prob.train_dirs.size()))));
        result.rmse = validation_rmse(prob, result.model, axes);
        return result;
    }

    CoreFit core = run_core_fit(prob, target, axes, opts);
    result.used_ridge = core.linear.used_ridge;
    result.train_history = std::move(core.history);
    const auto& weights = core.linear.weights;

    switch (target) {
        case ColorModelKind::DiffuseSG: {
            DiffuseSGModel m;
            m.diffuse = Vec3(weights(0, 0), weights(0, 1), weights(0, 2));
            m.alpha = Vec3(weights(1, 0), weights(1, 1), weights(1, 2));
            m.log_lambda = log_lambda_of(core.lambdas[0]);
            m.mu = core.mus[0];
            result.model = m;
            result.rmse = validation_rmse(prob, result.model, axes);
            break;
        }
        case ColorModelKind::DiffuseOrthoSG: {
            DiffuseOrthoSGModel m;
            m.diffuse = Vec3(weights(0, 0), weights(0, 1), weights(0, 2));
            for (int i = 0; i < 3; ++i) {
                m.alpha[static_cast<std::size_t>(i)] =
                    Vec3(weights(1 + i, 0), weights(1 + i, 1), weights(1 + i, 2));
                m.log_lambda[static_cast<std::size_t>(i)] = log_lambda_of(core.lambdas[static_cast<std::size_t>(i)]);
            }
            result.model = m;
            result.rmse = validation_rmse(prob, result.model, axes);
            break;
        }
        case ColorModelKind::SHOnly: {
            SHOnlyModel m;
            m.sh = SHCoeffs::zeros(2);
            for (int i = 0; i < 9; ++i)
                m.sh.coeffs[static_cast<std::size_t>(i)] = Vec3(weights(i, 0), weights(i, 1), weights(i, 2));
            result.model = m;
            result.rmse = validation_rmse(prob, result.model, axes);
            break;
        }
        case ColorModelKind::MixedSHSG:
            break;  // handled above
    }
    return result;
}

FitProblem make_problem(const std::function<Vec3(const Vec3&)>& radiance, ColorModelKind target,
                        const FitOptions& opts) {
    if (opts.samples < 64) throw InvalidArgument("fit requires >= 64 sample directions");
    FitProblem prob;
    Mat3 rot = seeded_rotation(opts.seed);
    prob.train_dirs = fibonacci_sphere(opts.samples, rot);
    Mat3 vrot = seeded_rotation(opts.seed + 1);
    prob.val_dirs = fibonacci_sphere(std::max(32, opts.samples / 4), vrot);
    // SH-backed targets carry the fixed 0.5 decode offset on both sides; remove
    // it from the objective so the linear solve sees the same quantity the
    // model's SH/diffuse part must reproduce.
    const double offset = shape_of(target).sh_cols == 9 ? 0.5 : 0.0;
    auto remove_offset = [&](const Vec3& v) { return Vec3(v - Vec3::Constant(offset)); };
    prob.train_y.reserve(prob.train_dirs.size());
    for (const Vec3& d : prob.train_dirs) prob.train_y.push_back(remove_offset(radiance(d)));
    prob.val_y.reserve(prob.val_dirs.size());
    for (const Vec3& d : prob.val_dirs) prob.val_y.push_back(remove_offset(radiance(d)));
    return prob;
}

}  // namespace

FitResult fit_to_function(const std::function<Vec3(const Vec3&)>& radiance, ColorModelKind target,
                          const Mat3& axes, const FitOptions& opts) {
    validate_ortho_axes(axes);
    return fit_impl(make_problem(radiance, target, opts), target, axes, opts);
}

FitResult fit_sg_to_sh(const SHCoeffs& sh_coeffs, ColorModelKind target, const Mat3& axes,
                       const FitOptions& opts) {
    if (sh_coeffs.degree != 3) throw InvalidArgument("fit_sg_to_sh expects degree-3 coefficients");
    auto radiance = [&](const Vec3& d) {
        auto basis = eval_sh_basis(d, 3);
        Vec3 acc = Vec3::Constant(0.5);
        for (int i = 0; i < 16; ++i) acc += basis[static_cast<std::size_t>(i)] * sh_coeffs.coeffs[static_cast<std::size_t>(i)];
        return acc;
    };
    return fit_to_function(radiance, target, axes, opts);
}

ConvertSummary convert_checkpoint(const std::string& in_path, const std::string& out_path,
                                  const ConvertOptions& opts) {
    Scene scene = load_ply(in_path);
    if (scene.gaussians.empty()) throw InvalidArgument("cannot convert an empty checkpoint");
    if (scene.model_kind() != ColorModelKind::SHOnly)
        throw InvalidArgument("convert_checkpoint expects a Reference3DGS (SH) input");

    Scene out = scene;
    out.set_shared_axes(opts.axes);
    ConvertSummary summary;
    summary.num_gaussians = scene.gaussians.size();
    summary.per_gaussian_rmse.assign(scene.gaussians.size(), 0.0);

    if (opts.target == ColorModelKind::SHOnly) {
        // Degree truncation is the exact least-squares projection for SH.
        for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
            const auto& src = std::get<SHOnlyModel>(scene.gaussians[i].color);
            SHOnlyModel dst{SHCoeffs::zeros(3)};
            for (int k = 0; k < 9; ++k) dst.sh.coeffs[static_cast<std::size_t>(k)] = src.sh.coeffs[static_cast<std::size_t>(k)];
            double se = 0.0;
            for (int k = 9; k < 16; ++k) se += src.sh.coeffs[static_cast<std::size_t>(k)].squaredNorm();
            summary.per_gaussian_rmse[i] = std::sqrt(se / 48.0);  // coefficient-space residual
            out.gaussians[i].color = std::move(dst);
        }
    } else {
        std::atomic<bool> warned{false};
        parallel_for(scene.gaussians.size(), opts.threads, [&](std::size_t i) {
            const auto& src = std::get<SHOnlyModel>(scene.gaussians[i].color);
            FitResult fit = fit_sg_to_sh(src.sh, opts.target, opts.axes, opts.fit);
            if (fit.used_ridge && !warned.exchange(true))
                std::cerr << "warning: ill-conditioned color fit, ridge fallback engaged\n";
            out.gaussians[i].color = std::move(fit.model);
            summary.per_gaussian_rmse[i] = fit.rmse;
        });
    }

    PlyLayout out_layout =
        opts.target == ColorModelKind::SHOnly ? PlyLayout::Reference3DGS : PlyLayout::SGExtended;
    save_ply(out, out_path, out_layout);

    summary.input_payload_bytes =
        summary.num_gaussians * 4ull *
        static_cast<std::uint64_t>(ply_floats_per_gaussian(PlyLayout::Reference3DGS, ColorModelKind::SHOnly));
    summary.output_payload_bytes =
        summary.num_gaussians * 4ull *
        static_cast<std::uint64_t>(ply_floats_per_gaussian(out_layout, opts.target));
    summary.input_file_bytes = std::filesystem::file_size(in_path);
    summary.output_file_bytes = std::filesystem::file_size(out_path);
    summary.payload_ratio = static_cast<double>(summary.output_payload_bytes) /
                            static_cast<double>(summary.input_payload_bytes);
    summary.reduction_percent = 100.0 * (1.0 - summary.payload_ratio);

    double sum = 0.0, max = 0.0;
    for (double r : summary.per_gaussian_rmse) {
        sum += r;
        max = std::max(max, r);
    }
    summary.rmse_mean = sum / static_cast<double>(summary.num_gaussians);
    summary.rmse_max = max;

    constexpr int kBins = 16;
    double top = std::max(max, 1e-12);
    summary.histogram_edges.resize(kBins + 1);
    summary.histogram_counts.assign(kBins, 0);
    for (int b = 0; b <= kBins; ++b) summary.histogram_edges[static_cast<std::size_t>(b)] = top * b / kBins;
    for (double r : summary.per_gaussian_rmse) {
        int b = std::min(kBins - 1, static_cast<int>(r / top * kBins));
        summary.histogram_counts[static_cast<std::size_t>(b)]++;
    }
    return summary;
}

void write_convert_report(const ConvertSummary& summary, const std::string& prefix) {
    {
        std::ofstream csv(prefix + ".csv");
        if (!csv) throw IoError("cannot write report: " + prefix + ".csv");
        csv << "gaussian,rmse\n";
        for (std::size_t i = 0; i < summary.per_gaussian_rmse.size(); ++i)
            csv << i << "," << summary.per_gaussian_rmse[i] << "\n";
    }
    nlohmann::json j;
    j["num_gaussians"] = summary.num_gaussians;
    j["input_payload_bytes"] = summary.input_payload_bytes;
    j["output_payload_bytes"] = summary.output_payload_bytes;
    j["input_file_bytes"] = summary.input_file_bytes;
    j["output_file_bytes"] = summary.output_file_bytes;
    j["payload_ratio"] = summary.payload_ratio;
    j["reduction_percent"] = summary.reduction_percent;
    j["rmse_mean"] = summary.rmse_mean;
    j["rmse_max"] = summary.rmse_max;
    j["histogram_edges"] = summary.histogram_edges;
    j["histogram_counts"] = summary.histogram_counts;
    if (summary.psnr_vs_input >= 0.0) j["psnr_vs_input"] = summary.psnr_vs_input;
    std::ofstream js(prefix + ".json");
    if (!js) throw IoError("cannot write report: " + prefix + ".json");
    js << j.dump(2) << "\n";
}

}  // namespace sgsplat
