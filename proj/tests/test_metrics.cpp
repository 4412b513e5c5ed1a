#include "sgsplat/metrics.hpp"

#include "sgsplat/common.hpp"

#include <doctest.h>

#include <cmath>

using namespace sgsplat;

namespace {

Image random_image(std::mt19937_64& gen, int w, int h) {
    Image img(w, h, 3);
    for (auto& v : img.data) v = uniform01(gen);
    return img;
}

int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

// Direct-formula SSIM oracle: non-separable 11x11 window evaluated per pixel
// straight from the definition.
double ssim_direct(const Image& a, const Image& b) {
    const int radius = 5;
    const double sigma = 1.5;
    double taps[11];
    double tap_sum = 0.0;
    for (int i = 0; i < 11; ++i) {
        double d = i - radius;
        taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        tap_sum += taps[i];
    }
    for (double& t : taps) t /= tap_sum;

    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double total = 0.0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x)
            for (int c = 0; c < a.channels; ++c) {
                double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
                for (int dy = -radius; dy <= radius; ++dy)
                    for (int dx = -radius; dx <= radius; ++dx) {
                        double w = taps[dy + radius] * taps[dx + radius];
                        double va = a.at(reflect_index(y + dy, a.height), reflect_index(x + dx, a.width), c);
                        double vb = b.at(reflect_index(y + dy, a.height), reflect_index(x + dx, a.width), c);
                        ma += w * va;
                        mb += w * vb;
                        maa += w * va * va;
                        mbb += w * vb * vb;
                        mab += w * va * vb;
                    }
                double var_a = maa - ma * ma;
                double var_b = mbb - mb * mb;
                double cov = mab - ma * mb;
                total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                         ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
            }
    return total / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("identical images score capped PSNR and unit SSIM") {
    std::mt19937_64 gen(5);
    Image img = random_image(gen, 24, 16);
    CHECK(psnr(img, img) == doctest::Approx(100.0));
    CHECK(ssim(img, img) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a constant 0.1 offset gives exactly 20 dB") {
    Image a(20, 20, 3);
    for (auto& v : a.data) v = 0.4;
    Image b = a;
    for (auto& v : b.data) v += 0.1;
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(psnr(a, b) == psnr(b, a));
}

TEST_CASE("psnr rejects mismatched dimensions") {
    Image a(8, 8, 3), b(8, 9, 3);
    CHECK_THROWS_AS(psnr(a, b), InvalidArgument);
    CHECK_THROWS_AS(ssim(a, b), InvalidArgument);
}

TEST_CASE("ssim matches the direct-formula oracle") {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 5; ++trial) {
        Image a = random_image(gen, 21, 17);
        Image b = random_image(gen, 21, 17);
        CHECK(ssim(a, b) == doctest::Approx(ssim_direct(a, b)).epsilon(1e-9));
    }
}

TEST_CASE("ssim is stable under a simultaneous affine rescale") {
    std::mt19937_64 gen(23);
    Image a = random_image(gen, 16, 16);
    Image b = random_image(gen, 16, 16);
    // Blend toward a so the pair is structurally similar, then rescale both.
    for (std::size_t i = 0; i < b.size(); ++i) b.data[i] = 0.8 * a.data[i] + 0.2 * b.data[i];
    double base = ssim(a, b);
    Image a2 = a, b2 = b;
    for (auto& v : a2.data) v = 0.9 * v + 0.05;
    for (auto& v : b2.data) v = 0.9 * v + 0.05;
    CHECK(ssim(a2, b2) == doctest::Approx(base).epsilon(1e-3));
}

TEST_CASE("ssim gradient matches finite differences") {
    std::mt19937_64 gen(31);
    Image a = random_image(gen, 8, 8);
    Image b = random_image(gen, 8, 8);
    SsimResult res = ssim_with_grad(a, b);
    CHECK(res.value == doctest::Approx(ssim(a, b)).epsilon(1e-14));
    const double h = 1e-6;
    for (std::size_t i = 0; i < a.size(); i += 7) {
        Image probe = a;
        probe.data[i] = a.data[i] + h;
        double hi = ssim(probe, b);
        probe.data[i] = a.data[i] - h;
        double lo = ssim(probe, b);
        double fd = (hi - lo) / (2.0 * h);
        CHECK(res.grad_a.data[i] == doctest::Approx(fd).epsilon(1e-5));
    }
}
