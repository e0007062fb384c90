#pragma once

#include <cmath>
#include <type_traits>
#include <vector>

#include "lwlab/constants.hpp"
#include "lwlab/errors.hpp"
#include "lwlab/vec3.hpp"

namespace lwlab {

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1].
/// Newton iteration on the Legendre recurrence; nodes accurate to ~1 ulp.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int n) {
        if (n < 1) throw RangeError("GaussLegendre: order must be >= 1");
        nodes.resize(n);
        weights.resize(n);
        const int m = (n + 1) / 2;  // roots come in +/- pairs
        for (int i = 0; i < m; ++i) {
            double x = std::cos(pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                // Legendre P_n(x) and P_{n-1}(x) by upward recurrence.
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
    }
};

/// Integrate f over [a, b] with an n-point Gauss-Legendre rule.
template <class F>
auto integrate_gl(F&& f, double a, double b, int n) {
    const GaussLegendre rule(n);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    std::decay_t<decltype(f(a))> acc{};
    for (int i = 0; i < n; ++i)
        acc += f(mid + half * rule.nodes[i]) * (half * rule.weights[i]);
    return acc;
}

/// Quadrature rule on the unit sphere: product of Gauss-Legendre in cos(theta)
/// with a uniform (trapezoidal) rule in phi. Exact for spherical harmonics up
/// to degree 2*n_polar - 1 and spectrally accurate for smooth integrands.
/// Weights sum to 4 pi.
struct SphereRule {
    std::vector<Vec3> dirs;
    std::vector<double> weights;

    static SphereRule product_gauss(int n_polar) {
        if (n_polar < 1) throw RangeError("SphereRule: order must be >= 1");
        const int n_phi = 2 * n_polar;
        const GaussLegendre gl(n_polar);
        SphereRule r;
        r.dirs.reserve(n_polar * n_phi);
        r.weights.reserve(n_polar * n_phi);
        for (int i = 0; i < n_polar; ++i) {
            const double ct = gl.nodes[i];
            const double st = std::sqrt(1.0 - ct * ct);
            const double w = gl.weights[i] * (2.0 * pi / n_phi);
            for (int j = 0; j < n_phi; ++j) {
                const double phi = 2.0 * pi * j / n_phi;
                r.dirs.push_back({st * std::cos(phi), st * std::sin(phi), ct});
                r.weights.push_back(w);
            }
        }
        return r;
    }

    /// Mean of f over the sphere of radius `radius` around `center`.
    template <class F>
    auto mean(F&& f, const Vec3& center, double radius) const {
        auto acc = f(center + radius * dirs[0]) * (weights[0] / (4.0 * pi));
        for (std::size_t k = 1; k < dirs.size(); ++k)
            acc += f(center + radius * dirs[k]) * (weights[k] / (4.0 * pi));
        return acc;
    }
};

/// Orthonormal pair spanning the plane perpendicular to unit vector u.
inline void orthonormal_frame(const Vec3& u, Vec3& e1, Vec3& e2) {
    const Vec3 trial = std::abs(u.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    e1 = normalized(cross(u, trial));
    e2 = cross(u, e1);
}

}  // namespace lwlab
