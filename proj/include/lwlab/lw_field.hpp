#pragma once

#include <cmath>

#include "lwlab/core.hpp"
#include "lwlab/errors.hpp"
#include "lwlab/lightcone.hpp"

namespace lwlab {

/// Field of a unit point charge from already-solved light-cone data.
///
/// With s = -1 (retarded) or +1 (advanced), u = 1 + s*(n.v):
///   E = (n + s v)(1 - v^2) / (r^2 u^3) + n x ((n + s v) x a) / (r u^3)
///   B = -s * n x E
/// all trajectory quantities taken at the light-cone time.
inline EMFieldValue lw_field_at(const LightConeData& d) {
    const double s = branch_sign(d.branch);
    const Vec3& n = d.n;
    const Vec3& v = d.state.v;
    const Vec3& a = d.state.a;
    const double u = 1.0 + s * dot(n, v);
    const double u3 = u * u * u;
    const Vec3 nsv = n + s * v;

    EMFieldValue f;
    f.E = (1.0 - norm2(v)) / (d.r * d.r * u3) * nsv +
          (1.0 / (d.r * u3)) * cross(n, cross(nsv, a));
    f.B = -s * cross(n, f.E);
    if (!is_finite(f))
        throw SingularityError("lw_field_at: non-finite field value");
    return f;
}

/// Retarded or advanced field of a unit charge moving along `tr`, at (x, t).
inline EMFieldValue lw_field(const TrajectoryHistory& tr, const Vec3& x, double t,
                             Branch branch) {
    return lw_field_at(solve_lightcone_time(tr, x, t, branch));
}

/// Closed-form field of a charge in eternal uniform motion, expressed through
/// its present position: E = (1-v^2) R / (|R|^2 - |R x v|^2)^{3/2}, B = v x E,
/// with R = x - q_now. Used as an independent cross-check of lw_field.
inline EMFieldValue boosted_coulomb(const Vec3& x, const Vec3& q_now, const Vec3& v) {
    const Vec3 R = x - q_now;
    const double r2 = norm2(R);
    if (r2 == 0.0) throw SingularityError("boosted_coulomb: field point on the charge");
    const double denom = std::pow(r2 - norm2(cross(R, v)), 1.5);
    EMFieldValue f;
    f.E = (1.0 - norm2(v)) / denom * R;
    f.B = cross(v, f.E);
    if (!is_finite(f))
        throw SingularityError("boosted_coulomb: non-finite field value");
    return f;
}

/// Instantaneous radiated power of a unit charge, natural units.
/// Non-relativistic limit: P = (2/3) |a|^2.
inline double larmor_power(const Vec3& a) { return (2.0 / 3.0) * norm2(a); }

/// Relativistic generalisation P = (2/3) gamma^6 (|a|^2 - |v x a|^2).
inline double larmor_power_relativistic(const Vec3& v, const Vec3& a) {
    const double g2 = 1.0 / (1.0 - norm2(v));
    return (2.0 / 3.0) * g2 * g2 * g2 * (norm2(a) - norm2(cross(v, a)));
}

}  // namespace lwlab
