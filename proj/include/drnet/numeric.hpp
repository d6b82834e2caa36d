#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace drnet {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; derives independent stream seeds from a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline double relu(double u) { return u > 0.0 ? u : 0.0; }

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if ((sum_ >= 0 ? sum_ : -sum_) >= (v >= 0 ? v : -v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Exactly rounded running sum (Shewchuk partials); the result does not depend on the order of add() calls.
class ExactSum {
public:
    void add(double x) {
        plain_ += x;
        std::size_t i = 0;
        for (double y : partials_) {
            if (std::abs(x) < std::abs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials_[i++] = lo;
            x = hi;
        }
        partials_.resize(i);
        partials_.push_back(x);
    }

    double value() const {
        if (!std::isfinite(plain_)) return plain_;
        std::size_t k = partials_.size();
        if (k == 0) return 0.0;
        double hi = partials_[--k], lo = 0.0;
        while (k > 0) {
            const double x = hi, y = partials_[--k];
            hi = x + y;
            lo = y - (hi - x);
            if (lo != 0.0) break;
        }
        // round half-even correction when the remaining partials push past a tie
        if (k > 0 && ((lo < 0.0 && partials_[k - 1] < 0.0) || (lo > 0.0 && partials_[k - 1] > 0.0))) {
            const double y = lo * 2.0, x = hi + y;
            if (y == x - hi) hi = x;
        }
        return hi;
    }

    /// sum / n with the rounding residual folded back in.
    double mean(std::size_t n) const {
        const double count = static_cast<double>(n);
        const double q = value() / count;
        if (!std::isfinite(q)) return q;
        ExactSum r = *this;
        const double prod = q * count;
        r.add(-prod);
        r.add(-std::fma(q, count, -prod));
        return q + r.value() / count;
    }

private:
    std::vector<double> partials_;
    double plain_ = 0.0;
};

/// Shortest decimal representation that round-trips to the same binary64.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text);

/// 64-bit FNV-1a; stable across platforms, used for config hashes.
inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double norm2(std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace drnet
