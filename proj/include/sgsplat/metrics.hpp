#pragma once

#include "sgsplat/image.hpp"

namespace sgsplat {

// 10 * log10(1 / MSE) for images in [0, 1], capped at 100 dB when MSE < 1e-10.
double psnr(const Image& a, const Image& b);

// Mean SSIM over pixels and channels: 11x11 Gaussian window (sigma 1.5),
// reflect padding, C1 = 0.01^2, C2 = 0.03^2.
double ssim(const Image& a, const Image& b);

// SSIM plus its gradient with respect to the first image (exact, including the
// reflect-padding adjoint). Used by the training loss.
struct SsimResult {
    double value = 0.0;
    Image grad_a;
};
SsimResult ssim_with_grad(const Image& a, const Image& b);

}  // namespace sgsplat
