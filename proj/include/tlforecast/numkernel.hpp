#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tlforecast/errors.hpp"

namespace tlf {

// ============================================================================
// Matrix
// ============================================================================

/// Dense row-major matrix of 64-bit floats. Immutable-by-convention once
/// built: library operations return fresh matrices instead of mutating
/// their inputs, so a Matrix can be shared read-only across threads.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major, length rows*cols

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
    }
};

/// Standard matrix product. Throws ShapeError when inner dimensions differ.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw ShapeError("matmul: inner dimensions differ (" + std::to_string(a.cols) +
                         " vs " + std::to_string(b.rows) + ")");
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

// ============================================================================
// Activations
// ============================================================================

/// Logistic sigmoid, branched on sign so large |x| cannot overflow exp().
inline double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double tanh_act(double x) { return std::tanh(x); }

inline Matrix sigmoid(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = sigmoid(x.data[i]);
    return out;
}

inline Matrix tanh_act(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) out.data[i] = std::tanh(x.data[i]);
    return out;
}

// ============================================================================
// SeededRng
// ============================================================================

/// Deterministic random number generator: xoshiro256++ with splitmix64
/// seeding. The algorithm is fixed here rather than delegated to the
/// platform, so equal seeds give bitwise-equal draw sequences on every
/// platform and standard library. Single-owner; not safe for concurrent
/// mutation.
///
/// References: Blackman & Vigna, "Scrambled linear pseudorandom number
/// generators" (xoshiro256++), and Steele et al. (splitmix64).
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t sm = seed;
        for (auto& s : state_) s = splitmix64(sm);
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1]; safe as a log() argument.
    double next_open_unit() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Standard normal draw via Box-Muller. Implemented explicitly because
    /// std::normal_distribution is not bitwise-portable across standard
    /// libraries.
    double next_normal() {
        const double u1 = next_open_unit();
        const double u2 = next_unit();
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t v, int k) {
        return (v << k) | (v >> (64 - k));
    }

    std::uint64_t state_[4];
    std::uint64_t seed_;
};

// ============================================================================
// Initialization
// ============================================================================

/// Glorot-uniform matrix: entries drawn from [-s, s], s = sqrt(6/(fan_in+fan_out)).
inline Matrix uniform_init(SeededRng& rng, std::size_t rows, std::size_t cols,
                           std::size_t fan_in, std::size_t fan_out) {
    if (rows < 1 || cols < 1)
        throw ShapeError("uniform_init: rows and cols must be >= 1");
    if (fan_in + fan_out == 0)
        throw ShapeError("uniform_init: fan_in + fan_out must be positive");
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix m(rows, cols);
    for (double& v : m.data) v = s * (2.0 * rng.next_unit() - 1.0);
    return m;
}

}  // namespace tlf
