#pragma once

// Dense vector / symmetric matrix primitives used by the learners.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace soauc {

inline void require_same_dim(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t p, double fill = 0.0) : data_(p, fill) {}
    Vector(std::initializer_list<double> values) : data_(values) {}
    explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    const std::vector<double>& raw() const noexcept { return data_; }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    Vector& operator+=(const Vector& o) {
        require_same_dim(size(), o.size(), "Vector +=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Vector& operator-=(const Vector& o) {
        require_same_dim(size(), o.size(), "Vector -=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Vector& operator*=(double a) noexcept {
        for (auto& v : data_) v *= a;
        return *this;
    }

    // this += a * o
    void axpy(double a, const Vector& o) {
        require_same_dim(size(), o.size(), "Vector axpy");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * o.data_[i];
    }

    friend bool operator==(const Vector&, const Vector&) = default;

private:
    std::vector<double> data_;
};

inline Vector operator+(Vector a, const Vector& b) { return a += b; }
inline Vector operator-(Vector a, const Vector& b) { return a -= b; }
inline Vector operator*(double s, Vector a) { return a *= s; }
inline Vector operator*(Vector a, double s) { return a *= s; }

inline double dot(const Vector& u, const Vector& v) {
    require_same_dim(u.size(), v.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

inline double squared_norm(const Vector& v) noexcept {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

inline double norm(const Vector& v) noexcept { return std::sqrt(squared_norm(v)); }

inline double squared_distance(const Vector& u, const Vector& v) {
    require_same_dim(u.size(), v.size(), "squared_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - v[i];
        s += d * d;
    }
    return s;
}

/// Symmetric p x p matrix stored densely. Writes go through set() / add_outer()
/// which keep entries[i][j] == entries[j][i] exactly.
///
/// A matrix flagged as a covariance carries a round-off scale (the largest
/// squared norm of the data that produced it) used by quad_form to clamp tiny
/// negative results.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t p) : p_(p), data_(p * p, 0.0) {}

    static SymMatrix identity(std::size_t p) {
        SymMatrix m(p);
        for (std::size_t i = 0; i < p; ++i) m.data_[i * p + i] = 1.0;
        return m;
    }

    std::size_t dim() const noexcept { return p_; }

    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * p_ + j]; }

    void set(std::size_t i, std::size_t j, double v) noexcept {
        data_[i * p_ + j] = v;
        data_[j * p_ + i] = v;
    }

    // this += scale * a a^T
    void add_outer(double scale, const Vector& a) {
        require_same_dim(p_, a.size(), "SymMatrix add_outer");
        for (std::size_t i = 0; i < p_; ++i) {
            const double ai = scale * a[i];
            for (std::size_t j = 0; j < p_; ++j) data_[i * p_ + j] += ai * a[j];
        }
    }

    void add_scaled(double scale, const SymMatrix& o) {
        require_same_dim(p_, o.p_, "SymMatrix add_scaled");
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += scale * o.data_[k];
    }

    // (M + M^T) / 2, in place.
    void symmetrize() noexcept {
        for (std::size_t i = 0; i < p_; ++i) {
            for (std::size_t j = i + 1; j < p_; ++j) {
                const double m = 0.5 * (data_[i * p_ + j] + data_[j * p_ + i]);
                data_[i * p_ + j] = m;
                data_[j * p_ + i] = m;
            }
        }
    }

    double trace() const noexcept {
        double t = 0.0;
        for (std::size_t i = 0; i < p_; ++i) t += data_[i * p_ + i];
        return t;
    }

    bool is_symmetric() const noexcept {
        for (std::size_t i = 0; i < p_; ++i)
            for (std::size_t j = i + 1; j < p_; ++j)
                if (data_[i * p_ + j] != data_[j * p_ + i]) return false;
        return true;
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    bool is_covariance() const noexcept { return covariance_; }
    double roundoff_scale() const noexcept { return roundoff_scale_; }
    void mark_covariance(double roundoff_scale) noexcept {
        covariance_ = true;
        roundoff_scale_ = roundoff_scale;
    }

    std::span<const double> values() const noexcept { return data_; }

    friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
        return a.p_ == b.p_ && a.data_ == b.data_;
    }

private:
    std::size_t p_ = 0;
    std::vector<double> data_;
    bool covariance_ = false;
    double roundoff_scale_ = 0.0;
};

inline Vector matvec(const SymMatrix& m, const Vector& w) {
    require_same_dim(m.dim(), w.size(), "matvec");
    const std::size_t p = m.dim();
    Vector out(p);
    for (std::size_t i = 0; i < p; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) s += m(i, j) * w[j];
        out[i] = s;
    }
    return out;
}

/// w^T M w. For covariance matrices a negative result within
/// 1e-12 * ||w||^2 * max(trace, round-off scale) is clamped to zero.
inline double quad_form(const SymMatrix& m, const Vector& w) {
    require_same_dim(m.dim(), w.size(), "quad_form");
    const std::size_t p = m.dim();
    double s = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < p; ++j) row += m(i, j) * w[j];
        s += w[i] * row;
    }
    if (s < 0.0 && m.is_covariance()) {
        const double threshold =
            1e-12 * squared_norm(w) * std::max(std::abs(m.trace()), m.roundoff_scale());
        if (s >= -threshold) s = 0.0;
    }
    return s;
}

}  // namespace soauc
