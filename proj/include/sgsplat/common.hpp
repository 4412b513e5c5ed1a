#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sgsplat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// Thrown when a caller violates a documented contract (bad argument, bad state).
class InvalidArgument : public std::runtime_error {
public:
    explicit InvalidArgument(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown on malformed files (PLY, JSON, image headers).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown on I/O failures (missing file, truncated stream).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a numeric invariant breaks (singular matrix, non-finite loss).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Like parallel_for below but the callback also receives the worker id (for
// thread-local accumulation buffers merged in fixed worker order). The first
// worker exception is rethrown on the calling thread after the join.
template <typename Fn>
void parallel_for_workers(std::size_t n, int threads, std::size_t num_workers, Fn&& fn) {
    int t = resolve_thread_count(threads);
    if (t <= 1 || n < 2 || num_workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(num_workers - 1);
    std::vector<std::exception_ptr> errors(num_workers);
    auto run_shard = [&](std::size_t w) {
        try {
            std::size_t begin = n * w / num_workers;
            std::size_t end = n * (w + 1) / num_workers;
            for (std::size_t i = begin; i < end; ++i) fn(i, w);
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    for (std::size_t w = 1; w < num_workers; ++w) pool.emplace_back(run_shard, w);
    run_shard(0);
    for (auto& th : pool) th.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
}

// Static contiguous partition of [0, n) across worker threads. Each worker owns a
// disjoint index range, so writes to per-index slots never race and results do not
// depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    int t = resolve_thread_count(threads);
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(t, 1)), n);
    parallel_for_workers(n, threads, workers, [&](std::size_t i, std::size_t) { fn(i); });
}

// Portable deterministic random helpers. std::normal_distribution and friends are
// implementation-defined, so every seeded code path draws through these instead.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& gen, double lo, double hi) {
    return lo + (hi - lo) * uniform01(gen);
}

inline double normal01(std::mt19937_64& gen) {
    // Box-Muller; guard against log(0).
    double u1 = uniform01(gen);
    double u2 = uniform01(gen);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline Vec3 random_unit_vector(std::mt19937_64& gen) {
    while (true) {
        Vec3 v(normal01(gen), normal01(gen), normal01(gen));
        double n = v.norm();
        if (n > 1e-9) return v / n;
    }
}

inline Vec4 random_unit_quaternion(std::mt19937_64& gen) {
    while (true) {
        Vec4 q(normal01(gen), normal01(gen), normal01(gen), normal01(gen));
        double n = q.norm();
        if (n > 1e-9) return q / n;
    }
}

// Rotation matrix from a possibly unnormalized quaternion (w, x, y, z).
inline Mat3 quat_to_rotation(const Vec4& q_raw) {
    double n = q_raw.norm();
    if (n < 1e-12) throw NumericError("degenerate rotation: zero quaternion");
    Vec4 q = q_raw / n;
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace sgsplat
