#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "hopmix/errors.hpp"

namespace hopmix {

// Query-side and parameter math runs in double; index/file storage is f32.
using Vec = std::vector<double>;
using VecF = std::vector<float>;

inline void require_dim(std::size_t a, std::size_t b, const char* where) {
    if (a != b) {
        throw ValidationError(std::string(where) + ": dim mismatch (" +
                              std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

inline void require_dim(std::span<const double> v, std::size_t d, const char* where) {
    require_dim(v.size(), d, where);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    require_dim(a.size(), b.size(), "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double dot(std::span<const double> a, std::span<const float> b) {
    require_dim(a.size(), b.size(), "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * static_cast<double>(b[i]);
    return acc;
}

inline void axpy(double a, std::span<const double> x, Vec& y) {
    require_dim(x.size(), y.size(), "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline Vec to_double(std::span<const float> v) {
    return Vec(v.begin(), v.end());
}

inline void to_double(std::span<const float> v, Vec& out) {
    out.assign(v.begin(), v.end());
}

inline VecF to_float(std::span<const double> v) {
    VecF out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
    return out;
}

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Max-subtracted softmax. Sum of the result is 1 within 1e-9.
inline Vec softmax(std::span<const double> z) {
    if (z.empty()) throw ValidationError("softmax: empty input");
    double m = *std::max_element(z.begin(), z.end());
    Vec p(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - m);
        sum += p[i];
    }
    for (double& x : p) x /= sum;
    return p;
}

// Reverse-mode softmax: given p = softmax(z) and dL/dp, returns dL/dz.
inline Vec softmax_backward(std::span<const double> p, std::span<const double> dp) {
    require_dim(p.size(), dp.size(), "softmax_backward");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * dp[i];
    Vec dz(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) dz[i] = p[i] * (dp[i] - s);
    return dz;
}

// Deterministic RNG wrapper. mt19937_64 has a standard-specified sequence and
// the uniform/normal transforms below are hand-rolled, so identical seeds give
// identical streams on every platform (std::uniform_real_distribution does not
// guarantee that).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01(), u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return gen_() % n; }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace hopmix
