#pragma once

#include <cmath>
#include <vector>

#include "lwlab/constants.hpp"
#include "lwlab/errors.hpp"
#include "lwlab/vec3.hpp"

namespace lwlab {

/// v(p) = p / sqrt(p^2 + m^2). Always |v| < 1 for m > 0.
inline Vec3 relativistic_velocity(const Vec3& p, double mass) {
    return p / std::sqrt(norm2(p) + mass * mass);
}

/// Relativistic energy sqrt(p^2 + m^2).
inline double relativistic_energy(const Vec3& p, double mass) {
    return std::sqrt(norm2(p) + mass * mass);
}

/// Inverse of relativistic_velocity: p = m v / sqrt(1 - v^2).
/// Requires |v| <= 1 - tol::velocity_margin.
inline Vec3 momentum_from_velocity(const Vec3& v, double mass) {
    const double v2 = norm2(v);
    if (v2 > (1.0 - tol::velocity_margin) * (1.0 - tol::velocity_margin))
        throw RangeError("momentum_from_velocity: speed too close to 1");
    return mass / std::sqrt(1.0 - v2) * v;
}

/// dp/dt for a charge with velocity v and coordinate acceleration a:
/// p = m gamma v  =>  dp/dt = m gamma (a + gamma^2 (v.a) v).
inline Vec3 momentum_rate(const Vec3& v, const Vec3& a, double mass) {
    const double g2 = 1.0 / (1.0 - norm2(v));
    const double g = std::sqrt(g2);
    return mass * g * (a + g2 * dot(v, a) * v);
}

/// Coordinate acceleration from momentum and its time derivative:
/// a = (dp/dt - v (v . dp/dt)) / E with v = p/E, E = sqrt(p^2 + m^2).
inline Vec3 accel_from_momentum_rate(const Vec3& p, const Vec3& pdot, double mass) {
    const double energy = relativistic_energy(p, mass);
    const Vec3 v = p / energy;
    return (pdot - dot(v, pdot) * v) / energy;
}

/// Electromagnetic field value (E, B) at one space-time point.
struct EMFieldValue {
    Vec3 E;
    Vec3 B;

    EMFieldValue& operator+=(const EMFieldValue& o) {
        E += o.E;
        B += o.B;
        return *this;
    }
    EMFieldValue& operator-=(const EMFieldValue& o) {
        E -= o.E;
        B -= o.B;
        return *this;
    }
    EMFieldValue& operator*=(double s) {
        E *= s;
        B *= s;
        return *this;
    }
};

inline EMFieldValue operator+(EMFieldValue a, const EMFieldValue& b) { return a += b; }
inline EMFieldValue operator-(EMFieldValue a, const EMFieldValue& b) { return a -= b; }
inline EMFieldValue operator*(double s, EMFieldValue a) { return a *= s; }
inline EMFieldValue operator*(EMFieldValue a, double s) { return a *= s; }

inline bool is_finite(const EMFieldValue& f) {
    return is_finite(f.E) && is_finite(f.B);
}

/// Largest |component| across E and B; convenient for tolerance checks.
inline double max_abs(const EMFieldValue& f) {
    double m = 0.0;
    for (double c : {f.E.x, f.E.y, f.E.z, f.B.x, f.B.y, f.B.z})
        m = std::max(m, std::abs(c));
    return m;
}

/// Poynting vector E x B / (4 pi) in natural units.
inline Vec3 poynting(const EMFieldValue& f) {
    return cross(f.E, f.B) / (4.0 * pi);
}

/// Who-feels-whom interaction switches e_ij in [0, 1].
/// Diagonal entries turn self-interaction on; they are only meaningful for
/// smeared charges or an explicit self-force model.
class CouplingMatrix {
  public:
    CouplingMatrix() = default;
    explicit CouplingMatrix(int n, double fill = 0.0) : n_(n), e_(n * n, fill) {}

    /// e_ij = 1 - delta_ij: everyone couples to everyone else, no self terms.
    static CouplingMatrix no_self(int n) {
        CouplingMatrix m(n, 1.0);
        for (int i = 0; i < n; ++i) m.at(i, i) = 0.0;
        return m;
    }
    static CouplingMatrix full(int n) { return CouplingMatrix(n, 1.0); }

    double& at(int i, int j) { return e_[index(i, j)]; }
    double at(int i, int j) const { return e_[index(i, j)]; }
    double operator()(int i, int j) const { return at(i, j); }
    int size() const { return n_; }

    bool has_self_coupling() const {
        for (int i = 0; i < n_; ++i)
            if (at(i, i) != 0.0) return true;
        return false;
    }

  private:
    int index(int i, int j) const {
        if (i < 0 || j < 0 || i >= n_ || j >= n_)
            throw RangeError("CouplingMatrix: index out of range");
        return i * n_ + j;
    }
    int n_ = 0;
    std::vector<double> e_;
};

/// Position/momentum pair, the phase-space point of one charge.
struct ChargeState {
    Vec3 q;
    Vec3 p;
};

}  // namespace lwlab
