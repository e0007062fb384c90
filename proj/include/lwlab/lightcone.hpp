#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "lwlab/constants.hpp"
#include "lwlab/errors.hpp"
#include "lwlab/trajectory.hpp"

namespace lwlab {

enum class Branch { Retarded, Advanced };

/// Sign convention bundled with Branch: retarded quantities carry -1,
/// advanced ones +1 (the time offset is t_lc = t + sign * |x - q(t_lc)|).
inline double branch_sign(Branch b) { return b == Branch::Retarded ? -1.0 : 1.0; }

/// Trajectory data evaluated at the light-cone time of (x, t).
struct LightConeData {
    double t_lc;            // light-cone time
    TrajectoryState state;  // trajectory state at t_lc
    Vec3 n;                 // unit vector (x - q(t_lc)) / r
    double r;               // |x - q(t_lc)|, positive
    Branch branch;
};

/// Solve t_lc = t + sign * |x - q(t_lc)| for the unique light-cone time.
///
/// The residual phi(s) = sign*(s - t) - |x - q(s)| satisfies
/// sign*phi'(s) = 1 + sign*(n.v) >= 1 - |v| > 0, so phi has exactly one root
/// on the branch side. It is bracketed by geometric expansion away from t and
/// polished with bisection-safeguarded Newton steps. Accepts when the step is
/// below time_tol and the residual below tol::lightcone_residual scaled by
/// the problem size.
inline LightConeData solve_lightcone_time(const TrajectoryHistory& tr, const Vec3& x,
                                          double t, Branch branch,
                                          double time_tol = tol::lightcone_time) {
    const double sgn = branch_sign(branch);
    auto phi = [&](double s) { return sgn * (s - t) - norm(x - tr.position(s)); };

    const double r0 = norm(x - tr.position(t));
    if (r0 == 0.0)
        throw SingularityError("solve_lightcone_time: query point on the trajectory");

    // Bracket: phi(t) = -r0 < 0 and phi -> +inf along the branch direction.
    double a = t;  // phi(a) < 0
    double b = t + sgn * r0;
    double phi_b = phi(b);
    int guard = 0;
    while (phi_b < 0.0) {
        a = b;
        b = t + sgn * (b - t) * 2.0;
        phi_b = phi(b);
        if (++guard > 128)
            throw IterationError("solve_lightcone_time: bracket expansion failed",
                                 guard, phi_b);
    }

    double s = 0.5 * (a + b);
    const double residual_scale = tol::lightcone_residual * (1.0 + std::abs(t) + r0);
    for (int it = 0;; ++it) {
        const TrajectoryState st = tr.state(s);
        const Vec3 d = x - st.q;
        const double r = norm(d);
        const double f = sgn * (s - t) - r;
        if (f < 0.0) a = s; else b = s;

        double s_next;
        if (r > 0.0) {
            const double dphi = sgn * (1.0 + sgn * (dot(d, st.v) / r));
            s_next = s - f / dphi;
        } else {
            s_next = 0.5 * (a + b);
        }
        // Newton must stay inside the bracket; otherwise bisect.
        if (!(s_next > std::min(a, b) && s_next < std::max(a, b)))
            s_next = 0.5 * (a + b);

        const double delta = std::abs(s_next - s);
        s = s_next;
        if (delta < time_tol && std::abs(f) < residual_scale) break;
        if (it >= 200)
            throw IterationError("solve_lightcone_time: no convergence", it, f);
    }

    LightConeData out;
    out.t_lc = s;
    out.state = tr.state(s);
    const Vec3 d = x - out.state.q;
    out.r = norm(d);
    if (out.r < 1e-300)
        throw SingularityError("solve_lightcone_time: light-cone point on the trajectory");
    out.n = d / out.r;
    out.branch = branch;
    return out;
}

}  // namespace lwlab
