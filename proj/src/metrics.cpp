#include "sgsplat/metrics.hpp"

#include <array>
#include <cmath>

namespace sgsplat {

namespace {

constexpr int kWindow = 11;
constexpr int kRadius = kWindow / 2;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, kWindow>& window_taps() {
    static const std::array<double, kWindow> taps = [] {
        std::array<double, kWindow> w{};
        double sum = 0.0;
        for (int i = 0; i < kWindow; ++i) {
            double d = i - kRadius;
            w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
            sum += w[static_cast<std::size_t>(i)];
        }
        for (auto& v : w) v /= sum;
        return w;
    }();
    return taps;
}

int reflect(int i, int n) {
    // Mirror with the edge sample included: -1 -> 0, n -> n - 1.
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

// Separable Gaussian blur, rows then columns.
Image blur(const Image& in) {
    const auto& w = window_taps();
    Image tmp(in.width, in.height, in.channels);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            for (int c = 0; c < in.channels; ++c) {
                double acc = 0.0;
                for (int k = -kRadius; k <= kRadius; ++k)
                    acc += w[static_cast<std::size_t>(k + kRadius)] * in.at(y, reflect(x + k, in.width), c);
                tmp.at(y, x, c) = acc;
            }
    Image out(in.width, in.height, in.channels);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            for (int c = 0; c < in.channels; ++c) {
                double acc = 0.0;
                for (int k = -kRadius; k <= kRadius; ++k)
                    acc += w[static_cast<std::size_t>(k + kRadius)] * tmp.at(reflect(y + k, in.height), x, c);
                out.at(y, x, c) = acc;
            }
    return out;
}

// Adjoint of blur: scatter through the same reflected stencil, columns then rows.
Image blur_adjoint(const Image& in) {
    const auto& w = window_taps();
    Image tmp(in.width, in.height, in.channels);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            for (int c = 0; c < in.channels; ++c) {
                double v = in.at(y, x, c);
                if (v == 0.0) continue;
                for (int k = -kRadius; k <= kRadius; ++k)
                    tmp.at(reflect(y + k, in.height), x, c) += w[static_cast<std::size_t>(k + kRadius)] * v;
            }
    Image out(in.width, in.height, in.channels);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x)
            for (int c = 0; c < in.channels; ++c) {
                double v = tmp.at(y, x, c);
                if (v == 0.0) continue;
                for (int k = -kRadius; k <= kRadius; ++k)
                    out.at(y, reflect(x + k, in.width), c) += w[static_cast<std::size_t>(k + kRadius)] * v;
            }
    return out;
}

void check_shapes(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw InvalidArgument("image dimensions do not match");
    if (a.size() == 0) throw InvalidArgument("empty image");
}

Image elementwise_mul(const Image& a, const Image& b) {
    Image out(a.width, a.height, a.channels);
    for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * b.data[i];
    return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
    check_shapes(a, b);
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a.data[i] - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse < 1e-10) return 100.0;
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

SsimResult ssim_impl(const Image& a, const Image& b, bool with_grad) {
    check_shapes(a, b);
    Image mu_a = blur(a);
    Image mu_b = blur(b);
    Image a2m = blur(elementwise_mul(a, a));
    Image b2m = blur(elementwise_mul(b, b));
    Image abm = blur(elementwise_mul(a, b));

    const std::size_t n = a.size();
    SsimResult res;
    Image g_mu_a, g_a2m, g_abm;
    if (with_grad) {
        g_mu_a = Image(a.width, a.height, a.channels);
        g_a2m = Image(a.width, a.height, a.channels);
        g_abm = Image(a.width, a.height, a.channels);
    }

    double total = 0.0;
    const double upstream = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double ma = mu_a.data[i], mb = mu_b.data[i];
        double va = a2m.data[i] - ma * ma;
        double vb = b2m.data[i] - mb * mb;
        double cov = abm.data[i] - ma * mb;
        double a1 = 2.0 * ma * mb + kC1;
        double a2 = 2.0 * cov + kC2;
        double b1 = ma * ma + mb * mb + kC1;
        double b2 = va + vb + kC2;
        double s = (a1 * a2) / (b1 * b2);
        total += s;
        if (!with_grad) continue;
        double g_a1 = upstream * a2 / (b1 * b2);
        double g_a2 = upstream * a1 / (b1 * b2);
        double g_b1 = -upstream * s / b1;
        double g_b2 = -upstream * s / b2;
        double g_cov = 2.0 * g_a2;
        double g_va = g_b2;
        // a1, b1 depend on mu_a directly; va and cov subtract mu products.
        g_mu_a.data[i] = 2.0 * mb * g_a1 + 2.0 * ma * g_b1 - 2.0 * ma * g_va - mb * g_cov;
        g_a2m.data[i] = g_va;
        g_abm.data[i] = g_cov;
    }
    res.value = total / static_cast<double>(n);
    if (!with_grad) return res;

    Image back_mu = blur_adjoint(g_mu_a);
    Image back_a2 = blur_adjoint(g_a2m);
    Image back_ab = blur_adjoint(g_abm);
    res.grad_a = Image(a.width, a.height, a.channels);
    for (std::size_t i = 0; i < n; ++i)
        res.grad_a.data[i] = back_mu.data[i] + 2.0 * a.data[i] * back_a2.data[i] +
                             b.data[i] * back_ab.data[i];
    return res;
}

}  // namespace

double ssim(const Image& a, const Image& b) { return ssim_impl(a, b, false).value; }

SsimResult ssim_with_grad(const Image& a, const Image& b) { return ssim_impl(a, b, true); }

}  // namespace sgsplat
