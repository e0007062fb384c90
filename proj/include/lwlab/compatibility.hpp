#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <utility>
#include <vector>

#include "lwlab/constants.hpp"
#include "lwlab/errors.hpp"
#include "lwlab/propagation.hpp"
#include "lwlab/trajectory.hpp"
#include "lwlab/vec3.hpp"

// Compatibility between a charge's forward motion and its posed initial field:
// zeroth/first-order matching (no singular shell), higher-order jet matching
// (smoothness of the field across the moving light front), measured jumps via
// straddle extrapolation, and surgery that adapts an incompatible initial
// field into a compatible one.

namespace lwlab {

/// Weights w such that f^(m)(x0) ~ sum_j w[j] f(nodes[j]) for arbitrary
/// distinct nodes (Fornberg's recurrence).
inline std::vector<double> fd_weights(double x0, const std::vector<double>& nodes,
                                      int m) {
    const int n = static_cast<int>(nodes.size());
    if (m < 0 || n < m + 1)
        throw RangeError("fd_weights: need at least m + 1 nodes");
    std::vector<std::vector<double>> c(m + 1, std::vector<double>(n, 0.0));
    c[0][0] = 1.0;
    double c1 = 1.0;
    for (int i = 1; i < n; ++i) {
        double c2 = 1.0;
        const double c4 = nodes[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if (j == i - 1) {
                const double c5 = nodes[i - 1] - x0;
                for (int k = std::min(i, m); k >= 1; --k)
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for (int k = std::min(i, m); k >= 1; --k)
                c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    return c[m];
}

namespace detail {

/// Largest node spacing of the stored (interpolated) part of the history.
/// Zero when the history has fewer than two nodes, i.e. is purely analytic.
inline double max_node_spacing(const TrajectoryHistory& tr) {
    const auto& ns = tr.nodes();
    double h = 0.0;
    for (std::size_t i = 1; i < ns.size(); ++i)
        h = std::max(h, ns[i].t - ns[i - 1].t);
    return h;
}

}  // namespace detail

/// l-th one-sided time derivative of the position of `tr` at t0, probing in
/// direction `side` (+1 forward, -1 backward).
///
/// Orders 1 and 2 read the stored kinematic state, which is exact at nodes.
/// Orders l >= 3 differentiate the acceleration with an (l + 2)-point
/// one-sided stencil; the step is aligned with the node grid when the probed
/// side is interpolated, so the stencil samples exact nodal values.
inline Vec3 trajectory_time_derivative(const TrajectoryHistory& tr, double t0, int l,
                                       int side) {
    if (l < 0) throw RangeError("trajectory_time_derivative: negative order");
    if (l == 0) return tr.position(t0);
    if (l == 1) return tr.state(t0).v;
    if (l == 2) return tr.state(t0).a;

    const int m = l - 2;             // differentiate acceleration m times
    const int n_nodes = m + 4;       // 4th-order one-sided stencil
    double h = std::pow(2.2e-16, 1.0 / (m + 4));
    const double spacing = detail::max_node_spacing(tr);
    if (spacing > 0.0) {
        // probe only matters where the history is interpolated
        const double t_probe_end = t0 + side * (n_nodes - 1) * std::max(h, spacing);
        const bool interpolated = side > 0 ? t_probe_end > tr.t_min() && t0 < tr.t_max()
                                           : t_probe_end < tr.t_max() && t0 > tr.t_min();
        if (interpolated) {
            if (spacing > 1e-2)
                throw ResolutionError(
                    "trajectory_time_derivative: node spacing too coarse for "
                    "derivative order " +
                    std::to_string(l));
            if (spacing > h) h = spacing;
        }
    }

    std::vector<double> ts(n_nodes);
    for (int j = 0; j < n_nodes; ++j) ts[j] = t0 + side * j * h;
    const std::vector<double> w = fd_weights(t0, ts, m);
    Vec3 d{};
    for (int j = 0; j < n_nodes; ++j) d += w[j] * tr.acceleration(ts[j]);
    return d;
}

struct C1Report {
    bool pass = false;
    Vec3 position_gap{};  // aux position minus actual position at the initial time
    Vec3 momentum_gap{};  // aux momentum minus actual momentum at the initial time
};

/// Zeroth/first-order compatibility: the singular shell terms cancel exactly
/// when the auxiliary trajectory reproduces the actual initial position and
/// momentum.
inline C1Report check_c1(const TrajectoryHistory& actual, const InitialFieldSpec& init) {
    if (!init.aux) throw ConfigError("initial_field.aux", "auxiliary trajectory missing");
    const double t0 = init.t0;
    C1Report r;
    r.position_gap = init.aux->position(t0) - actual.position(t0);
    r.momentum_gap = init.aux->momentum(t0) - actual.momentum(t0);
    const double qs = 1.0 + norm(actual.position(t0));
    const double ps = 1.0 + norm(actual.momentum(t0));
    r.pass = norm(r.position_gap) <= tol::c1_gap * qs &&
             norm(r.momentum_gap) <= tol::c1_gap * ps;
    return r;
}

struct DerivativeGap {
    int order = 0;         // l
    Vec3 actual_value{};   // l-th derivative of the actual position at t0+
    Vec3 aux_value{};      // l-th derivative of the auxiliary position at t0-
    double gap = 0.0;      // |actual - aux|
    double tolerance = 0.0;
    bool matched = false;
};

struct C2Report {
    int requested_order = 0;          // k
    std::vector<DerivativeGap> gaps;  // orders l = 1 .. k + 2
    /// Largest k' <= k such that orders 1 .. k' + 2 all match; -1 when even
    /// the field's continuity requirement (orders 1, 2) fails.
    int smoothness_class = -1;
    /// True when every tested order matched, i.e. the field is at least C^k
    /// across the moving front as far as this probe can tell.
    bool smooth_to_tested_order = false;
};

/// Higher-order compatibility: the field is C^k across the light front of the
/// initial point iff the trajectory derivatives of orders 1 .. k+2 of the
/// actual motion and the auxiliary motion agree at the initial time.
inline C2Report check_c2(const TrajectoryHistory& actual, const InitialFieldSpec& init,
                         int order) {
    if (!init.aux) throw ConfigError("initial_field.aux", "auxiliary trajectory missing");
    if (order < 0) throw RangeError("check_c2: order must be non-negative");
    C2Report rep;
    rep.requested_order = order;
    int matched_prefix = 0;
    bool prefix_alive = true;
    for (int l = 1; l <= order + 2; ++l) {
        DerivativeGap g;
        g.order = l;
        g.actual_value = trajectory_time_derivative(actual, init.t0, l, +1);
        g.aux_value = trajectory_time_derivative(*init.aux, init.t0, l, -1);
        g.gap = norm(g.actual_value - g.aux_value);
        g.tolerance = tol::c2_match *
                      (1.0 + std::max(norm(g.actual_value), norm(g.aux_value)));
        g.matched = g.gap <= g.tolerance;
        if (g.matched && prefix_alive)
            matched_prefix = l;
        else
            prefix_alive = false;
        rep.gaps.push_back(g);
    }
    rep.smoothness_class = matched_prefix >= 2 ? matched_prefix - 2 : -1;
    rep.smooth_to_tested_order = matched_prefix == order + 2;
    return rep;
}

struct ConeJumpOptions {
    int deriv_order = 0;    // 0: jump of the field, 1: jump of its normal derivative
    double delta0 = 1e-3;   // largest straddle offset
    EvalOptions eval{};
};

struct ConeJumpReport {
    EMFieldValue jump{};
    double magnitude = 0.0;
    double straddle[3] = {0.0, 0.0, 0.0};  // |D(d)|, |D(d/2)|, |D(d/4)| diagnostics
};

/// Jump of the regular field (or its radial derivative) across the light
/// front at radius t - t0 along `direction`, from straddling evaluations at
/// offsets delta, delta/2, delta/4 combined by Richardson extrapolation
/// (eliminates the O(delta) and O(delta^2) one-sided errors).
///
/// Requires the shell terms to cancel; a surviving singular shell makes the
/// pointwise straddle meaningless and raises SingularFrontError.
inline ConeJumpReport measure_cone_jump(const TrajectoryHistory& actual,
                                        const InitialFieldSpec& init,
                                        const Vec3& direction, double t,
                                        const ConeJumpOptions& opts = {}) {
    if (!init.aux) throw ConfigError("initial_field.aux", "auxiliary trajectory missing");
    const double tau = t - init.t0;
    if (!(tau > 0.0)) throw RangeError("measure_cone_jump: need t after the initial time");
    if (!(norm(direction) > 0.0)) throw RangeError("measure_cone_jump: zero direction");
    if (opts.deriv_order != 0 && opts.deriv_order != 1)
        throw RangeError("measure_cone_jump: deriv_order must be 0 or 1");
    const Vec3 n = direction / norm(direction);
    const Vec3 q0 = actual.position(init.t0);

    {
        const double sgn = -1.0;  // tau > 0: retarded-type shells
        SingularShell sa{q0, actual.momentum(init.t0), actual.mass(), sgn, 1.0, tau};
        SingularShell sb{init.aux->position(init.t0), init.aux->momentum(init.t0),
                         init.aux->mass(), sgn, -1.0, tau};
        const Vec3 x_on = q0 + tau * n;
        const EMFieldValue ca = sa.coefficient(x_on), cb = sb.coefficient(x_on);
        const double scale = 1.0 + max_abs(ca) + max_abs(cb);
        if (max_abs(ca + cb) > tol::c1_gap * scale)
            throw SingularFrontError(
                "measure_cone_jump: singular shell does not cancel; the pointwise "
                "jump across the front is not defined",
                {sa, sb}, x_on, t);
    }

    auto field_at = [&](double d) {
        return evaluate_field(actual, init, q0 + d * n, t, opts.eval).regular;
    };
    auto straddle = [&](double d) {
        if (opts.deriv_order == 0) return field_at(tau + d) - field_at(tau - d);
        const EMFieldValue outer = (1.0 / d) * (field_at(tau + 2.0 * d) - field_at(tau + d));
        const EMFieldValue inner = (1.0 / d) * (field_at(tau - d) - field_at(tau - 2.0 * d));
        return outer - inner;
    };

    const EMFieldValue d1 = straddle(opts.delta0);
    const EMFieldValue d2 = straddle(opts.delta0 / 2.0);
    const EMFieldValue d3 = straddle(opts.delta0 / 4.0);

    ConeJumpReport rep;
    rep.jump = (1.0 / 3.0) * (8.0 * d3 - 6.0 * d2 + d1);
    rep.magnitude = max_abs(rep.jump);
    rep.straddle[0] = max_abs(d1);
    rep.straddle[1] = max_abs(d2);
    rep.straddle[2] = max_abs(d3);
    return rep;
}

struct A1Options {
    int n_samples = 50;
    unsigned seed = 20240811u;
    double radial_margin = 0.05;  // sample radii start at tau * (1 + margin)
    double radial_span = 1.0;     // and extend to tau * (1 + margin + span)
};

struct A1Report {
    /// Max over the sampled outside-cone points of the field difference
    /// between the two motions; zero, since the outside field depends only on
    /// the initial data.
    double outside_max_diff = 0.0;
    /// Max over probe points on the front of the net shell coefficient of the
    /// perturbed motion (nonzero: the perturbation breaks compatibility).
    double perturbed_shell_magnitude = 0.0;
    int samples = 0;
};

/// Compare the fields of two motions that share the same initial data, at
/// random points strictly outside the light front of the initial point.
/// Outside, the decomposed field depends only on the auxiliary trajectory and
/// the free field, so a perturbation of the motion (e.g. a momentum kick at
/// the initial time) cannot be seen there.
inline A1Report perturbation_experiment_a1(const TrajectoryHistory& base,
                                           const TrajectoryHistory& perturbed,
                                           const InitialFieldSpec& init, double t,
                                           const A1Options& opts = {}) {
    if (!init.aux) throw ConfigError("initial_field.aux", "auxiliary trajectory missing");
    const double tau = std::abs(t - init.t0);
    if (!(tau > 0.0))
        throw RangeError("perturbation_experiment_a1: need t away from the initial time");
    const Vec3 q0 = base.position(init.t0);

    std::mt19937 rng(opts.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto random_dir = [&] {
        const double z = 2.0 * unit(rng) - 1.0;
        const double phi = 2.0 * pi * unit(rng);
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        return Vec3{s * std::cos(phi), s * std::sin(phi), z};
    };

    A1Report rep;
    rep.samples = opts.n_samples;
    for (int i = 0; i < opts.n_samples; ++i) {
        const double r = tau * (1.0 + opts.radial_margin + opts.radial_span * unit(rng));
        const Vec3 x = q0 + r * random_dir();
        const EMFieldValue fa = evaluate_field(base, init, x, t).regular;
        const EMFieldValue fb = evaluate_field(perturbed, init, x, t).regular;
        rep.outside_max_diff = std::max(rep.outside_max_diff, max_abs(fa - fb));
    }

    const double sgn = (t - init.t0) >= 0.0 ? -1.0 : 1.0;
    SingularShell sa{perturbed.position(init.t0), perturbed.momentum(init.t0),
                     perturbed.mass(), sgn, 1.0, tau};
    SingularShell sb{init.aux->position(init.t0), init.aux->momentum(init.t0),
                     init.aux->mass(), sgn, -1.0, tau};
    for (int i = 0; i < 12; ++i) {
        const Vec3 x_on = q0 + tau * random_dir();
        rep.perturbed_shell_magnitude = std::max(
            rep.perturbed_shell_magnitude, max_abs(sa.coefficient(x_on) + sb.coefficient(x_on)));
    }
    return rep;
}

namespace detail {

// exp(-1/x) for x > 0, with all derivatives vanishing at 0+. Cut off where
// the value underflows any tolerance in play.
inline double bump(double x) {
    if (x < 1.5e-3) return 0.0;
    return std::exp(-1.0 / x);
}
inline double bump_d1(double x) {
    if (x < 1.5e-3) return 0.0;
    return std::exp(-1.0 / x) / (x * x);
}
inline double bump_d2(double x) {
    if (x < 1.5e-3) return 0.0;
    return std::exp(-1.0 / x) * (1.0 / (x * x * x * x) - 2.0 / (x * x * x));
}

}  // namespace detail

/// Smooth step: 0 for s <= 0, 1 for s >= 1, flat to all orders at both ends.
inline double smooth_step(double s) {
    const double a = detail::bump(s), b = detail::bump(1.0 - s);
    if (a == 0.0) return 0.0;
    if (b == 0.0) return 1.0;
    return a / (a + b);
}

inline double smooth_step_d1(double s) {
    const double a = detail::bump(s), b = detail::bump(1.0 - s);
    if (a == 0.0 || b == 0.0) return 0.0;
    const double ap = detail::bump_d1(s), bp = detail::bump_d1(1.0 - s);
    const double sum = a + b;
    return (ap * b + a * bp) / (sum * sum);
}

inline double smooth_step_d2(double s) {
    const double a = detail::bump(s), b = detail::bump(1.0 - s);
    if (a == 0.0 || b == 0.0) return 0.0;
    const double ap = detail::bump_d1(s), bp = detail::bump_d1(1.0 - s);
    const double app = detail::bump_d2(s), bpp = detail::bump_d2(1.0 - s);
    const double sum = a + b;
    const double u = ap * b + a * bp;      // numerator of the first derivative
    const double up = app * b - a * bpp;   // d/ds (ap b - a (-bp)) = app b - a bpp
    const double sump = ap - bp;
    return (up * sum - 2.0 * u * sump) / (sum * sum * sum);
}

struct AdaptOptions {
    double window = 0.1;  // length of the blending interval before the initial time
    int match_order = 3;  // highest actual-position derivative reproduced (2 or 3)
};

/// Replace the auxiliary trajectory by one that is identical outside a window
/// around the initial time but joins the actual motion with matching position,
/// momentum, acceleration and (match_order >= 3) jerk. The returned spec makes
/// the initial field compatible: no singular shell, and the field is smooth
/// across the front up to the matched order.
///
/// Already-compatible specs are returned unchanged, so the operation is
/// idempotent. The original auxiliary data is preserved exactly for
/// t <= t0 - window.
inline InitialFieldSpec adapt_initial_field(const TrajectoryHistory& actual,
                                            const InitialFieldSpec& init,
                                            const AdaptOptions& opts = {}) {
    if (!init.aux) throw ConfigError("initial_field.aux", "auxiliary trajectory missing");
    if (!(opts.window > 0.0)) throw ConfigError("adapt.window", "must be positive");
    if (opts.match_order < 2 || opts.match_order > 3)
        throw ConfigError("adapt.match_order", "supported orders are 2 and 3");

    if (check_c1(actual, init).pass &&
        check_c2(actual, init, opts.match_order - 2).smooth_to_tested_order)
        return init;

    const double t0 = init.t0;
    const double w = opts.window;
    const double mass = actual.mass();
    const Vec3 q0 = actual.position(t0);
    const Vec3 v0 = actual.state(t0).v;
    const Vec3 a0 = actual.state(t0).a;
    const Vec3 j0 = opts.match_order >= 3
                        ? trajectory_time_derivative(actual, t0, 3, +1)
                        : Vec3{};

    auto taylor_q = [=](double dt) {
        return q0 + dt * v0 + (0.5 * dt * dt) * a0 + (dt * dt * dt / 6.0) * j0;
    };
    auto taylor_v = [=](double dt) { return v0 + dt * a0 + (0.5 * dt * dt) * j0; };
    auto taylor_a = [=](double dt) { return a0 + dt * j0; };

    std::shared_ptr<const TrajectoryHistory> old = init.aux;
    auto fn = [=](double t) -> TrajectoryState {
        const double dt = t - t0;
        if (dt <= -w) {
            const TrajectoryState s = old->state(t);
            return make_state(mass, s.q, s.v, s.a);
        }
        if (dt < 0.0) {
            // blend the old data into the matching jet
            const double s = (dt + w) / w;
            const double chi = smooth_step(s);
            const double chi1 = smooth_step_d1(s) / w;
            const double chi2 = smooth_step_d2(s) / (w * w);
            const TrajectoryState os = old->state(t);
            const Vec3 dq = taylor_q(dt) - os.q;
            const Vec3 dv = taylor_v(dt) - os.v;
            const Vec3 q = os.q + chi * dq;
            const Vec3 v = os.v + chi * dv + chi1 * dq;
            const Vec3 a = os.a + chi * (taylor_a(dt) - os.a) + 2.0 * chi1 * dv + chi2 * dq;
            return make_state(mass, q, v, a);
        }
        if (dt < w) {
            // fade the jet into straight-line motion
            const double s = dt / w;
            const double chi = smooth_step(s);
            const double chi1 = smooth_step_d1(s) / w;
            const double chi2 = smooth_step_d2(s) / (w * w);
            const Vec3 line = q0 + dt * v0;
            const Vec3 dq = line - taylor_q(dt);
            const Vec3 dv = v0 - taylor_v(dt);
            const Vec3 q = taylor_q(dt) + chi * dq;
            const Vec3 v = taylor_v(dt) + chi * dv + chi1 * dq;
            const Vec3 a = taylor_a(dt) - chi * taylor_a(dt) + 2.0 * chi1 * dv + chi2 * dq;
            return make_state(mass, q, v, a);
        }
        return make_state(mass, q0 + dt * v0, v0, Vec3{});
    };

    InitialFieldSpec out = init;
    out.aux = std::make_shared<TrajectoryHistory>(
        TrajectoryHistory::analytic(mass, fn, t0));
    return out;
}

}  // namespace lwlab
