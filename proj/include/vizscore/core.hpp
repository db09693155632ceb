#pragma once

// Deterministic vector math shared by every module: unit-norm embeddings,
// inner products, and a fixed, platform-independent PRNG. All arithmetic is
// 64-bit floating point.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vizscore {

// Error categories double as CLI exit codes: 2 = input/parse,
// 3 = domain precondition, 4 = numeric failure.
enum class ErrorKind : int {
    parse = 2,
    precondition = 3,
    numeric = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string name, const std::string& detail)
        : std::runtime_error(name + ": " + detail), kind_(kind), name_(std::move(name)) {}

    ErrorKind kind() const { return kind_; }
    const std::string& name() const { return name_; }

private:
    ErrorKind kind_;
    std::string name_;
};

inline Error parse_error(std::string name, const std::string& detail) {
    return Error(ErrorKind::parse, std::move(name), detail);
}
inline Error precondition_error(std::string name, const std::string& detail) {
    return Error(ErrorKind::precondition, std::move(name), detail);
}
inline Error numeric_error(std::string name, const std::string& detail) {
    return Error(ErrorKind::numeric, std::move(name), detail);
}

// Pre-normalization activations and image feature vectors. Entries must be
// finite; use check_finite before trusting external input.
using RawVector = std::vector<double>;

inline bool all_finite(const RawVector& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline void check_finite(const RawVector& v, const char* what) {
    if (!all_finite(v)) {
        throw precondition_error("NonFinite", std::string(what) + " contains NaN or Inf");
    }
}

inline double dot(const RawVector& a, const RawVector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double l2_norm(const RawVector& v) { return std::sqrt(dot(v, v)); }

// A real vector with unit l2 norm. Only constructible through normalize(),
// so the invariant |norm - 1| <= 1e-6 holds for every live instance.
class UnitEmbedding {
public:
    const RawVector& values() const { return values_; }
    std::size_t dim() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    friend UnitEmbedding normalize(const RawVector& v);

private:
    explicit UnitEmbedding(RawVector values) : values_(std::move(values)) {}
    RawVector values_;
};

inline constexpr double kNormEpsilon = 1e-12;

inline UnitEmbedding normalize(const RawVector& v) {
    check_finite(v, "vector");
    const double n = l2_norm(v);
    if (!(n > kNormEpsilon)) {
        throw precondition_error("ZeroVector", "cannot normalize a vector with norm <= 1e-12");
    }
    RawVector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
    return UnitEmbedding(std::move(out));
}

inline double inner(const UnitEmbedding& a, const UnitEmbedding& b) {
    if (a.dim() != b.dim()) {
        throw precondition_error("DimensionMismatch",
                                 "inner product of vectors with dims " + std::to_string(a.dim()) +
                                     " and " + std::to_string(b.dim()));
    }
    return dot(a.values(), b.values());
}

// Cosine similarity of raw vectors; zero-norm inputs score 0 instead of
// raising, which keeps lexicon propagation total over user-supplied tables.
inline double cosine_guarded(const RawVector& a, const RawVector& b) {
    if (a.size() != b.size()) {
        throw precondition_error("DimensionMismatch", "cosine of vectors with unequal dims");
    }
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na <= kNormEpsilon || nb <= kNormEpsilon) return 0.0;
    return dot(a, b) / (na * nb);
}

// Dense row-major matrix; dimensions are fixed at construction.
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

// Fixed PRNG: xoshiro256** seeded through splitmix64. Bit-reproducible on
// any platform; the derivations below are part of the on-disk contract
// (docs/design.md):
//   uniform01()      = (next_u64() >> 11) * 2^-53, in [0, 1)
//   uniform_pm1()    = 2 * uniform01() - 1
//   uniform_index(n) = min(n - 1, floor(uniform01() * n))
//   gaussian()       = Box-Muller on (1 - uniform01(), uniform01()),
//                      cosine branch first, sine branch cached
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform_pm1() { return 2.0 * uniform01() - 1.0; }

    std::size_t uniform_index(std::size_t n) {
        const double u = uniform01() * static_cast<double>(n);
        auto idx = static_cast<std::size_t>(u);
        return idx >= n ? n - 1 : idx;
    }

    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Fisher-Yates, iterating from the back, partner drawn via uniform_index.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = uniform_index(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        x += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::uint64_t state_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Entries i.i.d. uniform in [-1, 1]; identical (seed, dim) gives identical
// output on every platform.
inline RawVector seeded_random_vector(std::uint64_t seed, std::size_t dim) {
    if (dim == 0) {
        throw precondition_error("EmptyVector", "seeded_random_vector requires dim > 0");
    }
    Rng rng(seed);
    RawVector v(dim);
    for (auto& x : v) x = rng.uniform_pm1();
    return v;
}

}  // namespace vizscore
