#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace bonnetlab {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Square sampling of the parameter domain with `n` intervals per axis.
struct GridSpec {
    int n = 64;
    double u0 = 0.0, u1 = 1.0, v0 = 0.0, v1 = 1.0;

    int samples() const { return n + 1; }
    double hu() const { return (u1 - u0) / n; }
    double hv() const { return (v1 - v0) / n; }
    double u(int i) const { return u0 + i * hu(); }
    double v(int j) const { return v0 + j * hv(); }
};

/// Dense field over a (n+1) x (n+1) grid, index (i, j) with i along u.
template <class T>
class Field {
public:
    Field() = default;
    explicit Field(int samples, const T& init = T{}) : m_(samples), data_(static_cast<std::size_t>(samples) * samples, init) {}

    int size() const { return m_; }
    T& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * m_ + j]; }
    const T& operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * m_ + j]; }

    template <class F>
    auto map(F&& f) const {
        using R = std::decay_t<decltype(f((*this)(0, 0)))>;
        Field<R> out(m_);
        for (int i = 0; i < m_; ++i)
            for (int j = 0; j < m_; ++j) out(i, j) = f((*this)(i, j));
        return out;
    }

private:
    int m_ = 0;
    std::vector<T> data_;
};

namespace fd {

// Fourth-order first derivative along one axis; one-sided near the ends.
template <class T>
T d1(const Field<T>& f, int i, int j, int axis, double h) {
    const int m = f.size();
    if (m < 6) throw std::invalid_argument("grid too small for differencing");
    auto at = [&](int k) -> const T& { return axis == 0 ? f(k, j) : f(i, k); };
    const int k = axis == 0 ? i : j;
    const double c = 1.0 / (12.0 * h);
    if (k == 0) return T(c * (-25.0 * at(0) + 48.0 * at(1) - 36.0 * at(2) + 16.0 * at(3) - 3.0 * at(4)));
    if (k == 1) return T(c * (-3.0 * at(0) - 10.0 * at(1) + 18.0 * at(2) - 6.0 * at(3) + at(4)));
    if (k == m - 1)
        return T(-c * (-25.0 * at(m - 1) + 48.0 * at(m - 2) - 36.0 * at(m - 3) + 16.0 * at(m - 4) - 3.0 * at(m - 5)));
    if (k == m - 2) return T(-c * (-3.0 * at(m - 1) - 10.0 * at(m - 2) + 18.0 * at(m - 3) - 6.0 * at(m - 4) + at(m - 5)));
    return T(c * (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)));
}

// Fourth-order second derivative along one axis; one-sided near the ends.
template <class T>
T d2(const Field<T>& f, int i, int j, int axis, double h) {
    const int m = f.size();
    if (m < 6) throw std::invalid_argument("grid too small for differencing");
    auto at = [&](int k) -> const T& { return axis == 0 ? f(k, j) : f(i, k); };
    const int k = axis == 0 ? i : j;
    const double c = 1.0 / (12.0 * h * h);
    auto edge0 = [&](auto&& a) {
        return T(c * (45.0 * a(0) - 154.0 * a(1) + 214.0 * a(2) - 156.0 * a(3) + 61.0 * a(4) - 10.0 * a(5)));
    };
    auto edge1 = [&](auto&& a) { return T(c * (10.0 * a(0) - 15.0 * a(1) - 4.0 * a(2) + 14.0 * a(3) - 6.0 * a(4) + a(5))); };
    auto rev = [&](int q) -> const T& { return at(m - 1 - q); };
    if (k == 0) return edge0(at);
    if (k == 1) return edge1(at);
    if (k == m - 1) return edge0(rev);
    if (k == m - 2) return edge1(rev);
    return T(c * (-at(k - 2) + 16.0 * at(k - 1) - 30.0 * at(k) + 16.0 * at(k + 1) - at(k + 2)));
}

template <class T>
Field<T> diff(const Field<T>& f, int axis, double h) {
    Field<T> out(f.size());
    for (int i = 0; i < f.size(); ++i)
        for (int j = 0; j < f.size(); ++j) out(i, j) = d1(f, i, j, axis, h);
    return out;
}

}  // namespace fd

}  // namespace bonnetlab
