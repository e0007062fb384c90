#pragma once

#include <cmath>
#include <string>
#include <type_traits>

#include "lwlab/errors.hpp"
#include "lwlab/quadrature.hpp"
#include "lwlab/vec3.hpp"

namespace lwlab {

/// Radially symmetric C-infinity charge density with compact support:
///     rho(r) = A exp(-1 / (1 - (r/R)^2))   for r < R,   0 otherwise.
/// A is fixed numerically so that the density integrates to total_charge.
class Mollifier {
  public:
    Mollifier(double radius, double total_charge = 1.0)
        : radius_(radius), total_charge_(total_charge) {
        if (!(radius > 0.0)) throw RangeError("Mollifier: radius must be positive");
        // integral of s^2 exp(-1/(1-s^2)) over [0,1]; integrand is smooth and
        // vanishes with all derivatives at s = 1, so GL converges fast.
        const double shape = integrate_gl(
            [](double s) { return s * s * std::exp(-1.0 / (1.0 - s * s)); }, 0.0,
            1.0, 64);
        amplitude_ = total_charge / (4.0 * pi * radius * radius * radius * shape);
    }

    double radius() const { return radius_; }
    double total_charge() const { return total_charge_; }

    double density(double r) const {
        const double s = r / radius_;
        if (s >= 1.0) return 0.0;
        return amplitude_ * std::exp(-1.0 / (1.0 - s * s));
    }
    double density(const Vec3& d) const { return density(norm(d)); }

  private:
    double radius_;
    double total_charge_;
    double amplitude_;
};

struct MollifierQuadratureOptions {
    // The bump profile is smooth but not analytic (flat at the support edge),
    // so Gauss-Legendre converges subgeometrically; 64 radial points match the
    // order used to normalise the amplitude, making conv(rho, 1) exact to
    // machine precision.
    int radial_order = 64;  // Gauss-Legendre points per radial interval
    int sphere_order = 12;  // polar order of the product sphere rule
};

/// Convolution (rho * g)(x) = integral rho(y) g(x - y) d^3 y over the support
/// ball, as a product rule: sphere directions x radial Gauss-Legendre.
/// g may return double, Vec3, or any type with += and *double; exceptions
/// from g are rethrown as QuadratureError naming the failing point.
template <class F>
auto mollifier_quadrature(const Mollifier& rho, F&& g, const Vec3& x,
                          const MollifierQuadratureOptions& opts = {}) {
    const SphereRule sphere = SphereRule::product_gauss(opts.sphere_order);
    const GaussLegendre radial(opts.radial_order);
    const double R = rho.radius();

    auto term = [&](const Vec3& y, double w) {
        try {
            return g(x - y) * w;
        } catch (const Error& err) {
            throw QuadratureError(std::string("mollifier_quadrature: integrand failed at (") +
                                  std::to_string((x - y).x) + ", " +
                                  std::to_string((x - y).y) + ", " +
                                  std::to_string((x - y).z) + "): " + err.what());
        }
    };

    const double mid = 0.5 * R, half = 0.5 * R;
    std::decay_t<decltype(g(x))> acc{};
    for (std::size_t d = 0; d < sphere.dirs.size(); ++d) {
        for (int k = 0; k < opts.radial_order; ++k) {
            const double s = mid + half * radial.nodes[k];
            const double w =
                sphere.weights[d] * half * radial.weights[k] * s * s * rho.density(s);
            acc += term(s * sphere.dirs[d], w);
        }
    }
    return acc;
}

}  // namespace lwlab
