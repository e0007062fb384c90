#pragma once

#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "lwlab/core.hpp"
#include "lwlab/errors.hpp"
#include "lwlab/free_field.hpp"
#include "lwlab/lw_field.hpp"
#include "lwlab/mollifier.hpp"
#include "lwlab/trajectory.hpp"

namespace lwlab {

/// How a field configuration at t = 0 is represented: a convex combination of
/// the retarded and advanced fields of an auxiliary trajectory plus a free
/// field. The auxiliary trajectory must pass through the actual charge
/// position at t = 0.
struct InitialFieldSpec {
    double lambda = 1.0;  // weight of the retarded part, in [0, 1]
    std::shared_ptr<const TrajectoryHistory> aux;
    FreeFieldSpec free_field = FreeFieldSpec::zero();
    /// Time at which the initial data is posed. Cone bookkeeping and free-field
    /// propagation are relative to t0; analytic free-field kinds specify their
    /// t = t0 slice.
    double t0 = 0.0;

    static InitialFieldSpec from_trajectory(std::shared_ptr<const TrajectoryHistory> aux,
                                            double lambda = 1.0,
                                            FreeFieldSpec free = FreeFieldSpec::zero(),
                                            double t0 = 0.0) {
        if (!(lambda >= 0.0 && lambda <= 1.0))
            throw ConfigError("initial_field.lambda", "must lie in [0, 1]");
        if (!aux) throw ConfigError("initial_field.aux", "auxiliary trajectory missing");
        InitialFieldSpec s;
        s.lambda = lambda;
        s.aux = std::move(aux);
        s.free_field = std::move(free);
        s.t0 = t0;
        return s;
    }

    /// Static Coulomb field centred on q0: auxiliary charge at rest forever.
    static InitialFieldSpec coulomb(const Vec3& q0, double mass) {
        return from_trajectory(
            std::make_shared<TrajectoryHistory>(TrajectoryHistory::at_rest(q0, mass)));
    }
};

/// Delta distribution supported on the sphere |x - center| = radius:
///     coefficient(x) * delta(|t| - |x - center|)
/// with
///     coefficient = strength / ((1 + sign n0.v0) |x - center|) * (n0 + sign v0; -n0 x v0),
/// n0 = (x - center)/|x - center|, v0 = v(momentum). sign is -1 for the
/// retarded-type shell (t >= 0) and +1 for the advanced-type one.
struct SingularShell {
    Vec3 center;
    Vec3 momentum;
    double mass = 1.0;
    double sign = -1.0;
    double strength = 1.0;
    double radius = 0.0;

    EMFieldValue coefficient(const Vec3& x) const {
        const Vec3 d = x - center;
        const double r = norm(d);
        if (r == 0.0)
            throw SingularityError("SingularShell: coefficient requested at the center");
        const Vec3 n0 = d / r;
        const Vec3 v0 = relativistic_velocity(momentum, mass);
        const double denom = (1.0 + sign * dot(n0, v0)) * r;
        EMFieldValue c;
        c.E = (strength / denom) * (n0 + sign * v0);
        c.B = (strength / denom) * (-1.0 * cross(n0, v0));
        return c;
    }
};

/// Evaluation halted on a light front whose shell terms do not cancel.
struct SingularFrontError : Error {
    std::vector<SingularShell> shells;
    Vec3 x;
    double t = 0.0;
    SingularFrontError(const std::string& what_, std::vector<SingularShell> shells_,
                       const Vec3& x_, double t_)
        : Error(what_), shells(std::move(shells_)), x(x_), t(t_) {}
};

enum class ConeRegion { Inside, Outside, OnCone };

/// Field value at one point: the locally smooth part plus any singular shell
/// terms whose sphere passes within the reporting band of the point.
struct FieldSample {
    EMFieldValue regular;
    std::vector<std::pair<SingularShell, EMFieldValue>> shells;
    ConeRegion region = ConeRegion::Outside;

    EMFieldValue net_shell() const {
        EMFieldValue net{};
        for (const auto& [shell, coeff] : shells) net += coeff;
        return net;
    }
};

struct EvalOptions {
    /// Half-width of the band around the cone inside which shells are reported.
    double band = tol::shell_band;
    /// Throw SingularFrontError when the point lies exactly on a front whose
    /// net shell coefficient does not vanish.
    bool throw_on_front = true;
};

inline ConeRegion classify_region(double dist, double radius, double band) {
    if (std::abs(dist - radius) <= band) return ConeRegion::OnCone;
    return dist < radius ? ConeRegion::Inside : ConeRegion::Outside;
}

namespace detail {

inline void append_shells(FieldSample& sample, const TrajectoryHistory& actual,
                          const InitialFieldSpec& init, const Vec3& x, double t,
                          double tau, double dist, double radius, const EvalOptions& opts) {
    if (!(radius > 0.0) || std::abs(dist - radius) > opts.band) return;
    const double sgn = tau >= 0.0 ? -1.0 : 1.0;  // retarded-type shells for tau >= 0
    const Vec3 q0 = actual.position(init.t0);
    SingularShell sh_actual{q0, actual.momentum(init.t0), actual.mass(), sgn, 1.0, radius};
    SingularShell sh_aux{init.aux->position(init.t0), init.aux->momentum(init.t0),
                         init.aux->mass(), sgn, -1.0, radius};
    const EMFieldValue ca = sh_actual.coefficient(x);
    const EMFieldValue cb = sh_aux.coefficient(x);
    const EMFieldValue net = ca + cb;
    if (opts.throw_on_front && dist == radius && max_abs(net) > tol::c1_gap)
        throw SingularFrontError(
            "evaluate_field: point lies on a singular light front", {sh_actual, sh_aux},
            x, t);
    sample.shells.emplace_back(sh_actual, ca);
    sample.shells.emplace_back(sh_aux, cb);
}

}  // namespace detail

/// Field at (x, t) of a unit charge moving along `actual` with initial field
/// `init`, via the light-cone decomposition:
///
///   f_t = 1_ball (f^{-s}[actual] - f^{-s}[aux])
///       + lambda f^-[aux] + (1-lambda) f^+[aux]
///       + shell terms on |x - q0| = |tau|
///       + free field,
///
/// tau = t - t0, s = sign(tau) with s(0) = +1, ball = B_|tau|(q0(t0)). Inside
/// the ball the same-branch aux contributions cancel algebraically, so they
/// are folded:
///   inside, tau >= 0:  f^-[actual] + (1-lambda)(f^+[aux] - f^-[aux]) + free
///   inside, tau <  0:  f^+[actual] + lambda (f^-[aux] - f^+[aux]) + free
/// which keeps the cancellation exact in floating point. Shell terms are
/// carried symbolically on the sample; they are never added to `regular`.
inline FieldSample evaluate_field(const TrajectoryHistory& actual,
                                  const InitialFieldSpec& init, const Vec3& x, double t,
                                  const EvalOptions& opts = {}) {
    if (!init.aux) throw ConfigError("initial_field.aux", "auxiliary trajectory missing");
    if (!(init.lambda >= 0.0 && init.lambda <= 1.0))
        throw ConfigError("initial_field.lambda", "must lie in [0, 1]");
    const Vec3 q0 = actual.position(init.t0);
    {
        const Vec3 q0_aux = init.aux->position(init.t0);
        if (norm(q0_aux - q0) > 1e-9 * (1.0 + norm(q0)))
            throw ConfigError("initial_field.aux",
                              "auxiliary trajectory must pass through q0 at the "
                              "initial time");
    }

    const double tau = t - init.t0;
    const double radius = std::abs(tau);
    const double dist = norm(x - q0);
    const double lambda = init.lambda;
    const Branch same = tau >= 0.0 ? Branch::Retarded : Branch::Advanced;
    const Branch other = tau >= 0.0 ? Branch::Advanced : Branch::Retarded;

    FieldSample sample;
    sample.region = classify_region(dist, radius, opts.band);

    const double w_other = (same == Branch::Retarded) ? 1.0 - lambda : lambda;
    if (dist < radius) {
        // inside the ball
        sample.regular = lw_field(actual, x, t, same);
        if (w_other != 0.0)
            sample.regular += w_other * (lw_field(*init.aux, x, t, other) -
                                         lw_field(*init.aux, x, t, same));
    } else {
        EMFieldValue acc{};
        if (lambda != 0.0) acc += lambda * lw_field(*init.aux, x, t, Branch::Retarded);
        if (lambda != 1.0)
            acc += (1.0 - lambda) * lw_field(*init.aux, x, t, Branch::Advanced);
        sample.regular = acc;
    }
    sample.regular += propagate_free_field(init.free_field, x, tau);

    detail::append_shells(sample, actual, init, x, t, tau, dist, radius, opts);

    if (!is_finite(sample.regular))
        throw SingularityError("evaluate_field: non-finite field value");
    return sample;
}

/// Same value as evaluate_field, assembled term by term from the expanded
/// decomposition (ball-supported new/retarded/advanced pieces, the outside
/// remainder, shells, free field). Kept as a structural cross-check.
inline FieldSample evaluate_field_expanded(const TrajectoryHistory& actual,
                                           const InitialFieldSpec& init, const Vec3& x,
                                           double t, const EvalOptions& opts = {}) {
    if (!init.aux) throw ConfigError("initial_field.aux", "auxiliary trajectory missing");
    const Vec3 q0 = actual.position(init.t0);
    const double tau = t - init.t0;
    const double radius = std::abs(tau);
    const double dist = norm(x - q0);
    const double lambda = init.lambda;
    const Branch same = tau >= 0.0 ? Branch::Retarded : Branch::Advanced;

    FieldSample sample;
    sample.region = classify_region(dist, radius, opts.band);

    EMFieldValue acc{};
    if (dist < radius) {
        acc += lw_field(actual, x, t, same);                      // new field
        const EMFieldValue aux_same = lw_field(*init.aux, x, t, same);
        if (lambda != 0.0)
            acc += lambda * (lw_field(*init.aux, x, t, Branch::Retarded) - aux_same);
        if (lambda != 1.0)
            acc += (1.0 - lambda) *
                   (lw_field(*init.aux, x, t, Branch::Advanced) - aux_same);
    } else {
        if (lambda != 0.0) acc += lambda * lw_field(*init.aux, x, t, Branch::Retarded);
        if (lambda != 1.0)
            acc += (1.0 - lambda) * lw_field(*init.aux, x, t, Branch::Advanced);
    }
    acc += propagate_free_field(init.free_field, x, tau);
    sample.regular = acc;

    detail::append_shells(sample, actual, init, x, t, tau, dist, radius, opts);

    if (!is_finite(sample.regular))
        throw SingularityError("evaluate_field_expanded: non-finite field value");
    return sample;
}

/// Field of a charge whose initial field is the static Coulomb field of its
/// t = 0 position. If the charge is actually moving, the shell terms on
/// |x - q0| = |t| do not cancel.
inline FieldSample evaluate_coulomb_case(const TrajectoryHistory& actual, const Vec3& x,
                                         double t, const EvalOptions& opts = {}) {
    return evaluate_field(actual, InitialFieldSpec::coulomb(actual.position(0.0),
                                                            actual.mass()),
                          x, t, opts);
}

/// Toy sourced-field expectation: -g / (4 pi |x - q0|) inside the light cone
/// of (0, q0), zero outside. Exact closed form, used to cross-check cone
/// bookkeeping end to end.
inline double qft_toy_expectation(double g, const Vec3& x, double t, const Vec3& q0) {
    const double r = norm(x - q0);
    if (r == 0.0) throw SingularityError("qft_toy_expectation: point at the source");
    if (r > std::abs(t)) return 0.0;
    return -g / (4.0 * pi * r);
}

struct SmearedOptions {
    // The mollifier profile is flat at the support edge, so the radial rule
    // converges subgeometrically; 32 points keep the charge-average of a
    // Coulomb field accurate to ~1e-9 relative.
    int radial_order = 32;  // Gauss-Legendre points per radial subinterval
    int sphere_order = 12;  // polar order of the direction rule
    int cap_polar = 24;     // polar order of the shell cap rule
    double guard = 1e-9;    // required clearance between x and the charge point
    /// Permit x to coincide with the charge position itself (self-field
    /// averaging). Along rays from the charge point the 1/r^2 blow-up of the
    /// field is cancelled by the volume element, so product quadrature is
    /// sound there; it is not for x merely near the charge.
    bool allow_charge_center = false;
};

namespace detail {

/// Integral over the portion of the sphere |z - center| = radius lying within
/// distance R of x, of rho(|x - z|) * coeff(z) dsigma(z), where coeff sums the
/// shell coefficients. Parametrised by mu = cos(angle from the x - center axis).
inline EMFieldValue shell_cap_integral(const std::vector<SingularShell>& shells,
                                       const Mollifier& rho, const Vec3& x,
                                       double radius, int cap_polar) {
    if (shells.empty() || !(radius > 0.0)) return {};
    const Vec3 center = shells.front().center;
    const Vec3 w = x - center;
    const double d = norm(w);
    const double R = rho.radius();

    double mu_lo;
    Vec3 axis;
    if (d < 1e-14 * std::max(1.0, radius)) {
        if (radius >= R) return {};  // sphere entirely outside the support
        mu_lo = -1.0;
        axis = Vec3{0, 0, 1};
    } else {
        if (std::abs(d - radius) >= R) return {};  // no intersection
        mu_lo = std::max(-1.0, (d * d + radius * radius - R * R) / (2.0 * d * radius));
        axis = w / d;
    }

    Vec3 e1, e2;
    orthonormal_frame(axis, e1, e2);
    const GaussLegendre gl(cap_polar);
    const int n_phi = 2 * cap_polar;
    const double mu_mid = 0.5 * (mu_lo + 1.0), mu_half = 0.5 * (1.0 - mu_lo);

    EMFieldValue acc{};
    for (int i = 0; i < cap_polar; ++i) {
        const double mu = mu_mid + mu_half * gl.nodes[i];
        const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        const double w_mu = mu_half * gl.weights[i] * radius * radius * (2.0 * pi / n_phi);
        for (int j = 0; j < n_phi; ++j) {
            const double phi = 2.0 * pi * j / n_phi;
            const Vec3 z =
                center + radius * (mu * axis + s * (std::cos(phi) * e1 + std::sin(phi) * e2));
            const double rho_val = rho.density(norm(x - z));
            if (rho_val == 0.0) continue;
            EMFieldValue coeff{};
            for (const SingularShell& sh : shells) coeff += sh.coefficient(z);
            acc += (w_mu * rho_val) * coeff;
        }
    }
    return acc;
}

}  // namespace detail

/// Convolution (rho * f)(x) of the decomposed field with a mollifier, with the
/// light front treated exactly: the locally smooth part is integrated ray by
/// ray with radial subintervals split at the cone crossings, and the shell
/// delta contributes a surface integral over the cap of the front sphere that
/// lies inside the support ball.
inline EMFieldValue smeared_field(const TrajectoryHistory& actual,
                                  const InitialFieldSpec& init, const Mollifier& rho,
                                  const Vec3& x, double t,
                                  const SmearedOptions& opts = {}) {
    const double R = rho.radius();
    const double clearance = norm(x - actual.position(t));
    if (clearance <= R + opts.guard &&
        !(opts.allow_charge_center && clearance <= 1e-12 * (1.0 + R)))
        throw SingularityError("smeared_field: charge point inside the support ball");

    const Vec3 q0 = actual.position(init.t0);
    const double tau = t - init.t0;
    const double radius = std::abs(tau);
    const Vec3 w = x - q0;

    EvalOptions eval_opts;
    eval_opts.throw_on_front = false;  // nodes never land exactly on the cone

    const SphereRule dirs = SphereRule::product_gauss(opts.sphere_order);
    const GaussLegendre radial(opts.radial_order);

    auto integrate_segment = [&](const Vec3& u, double s0, double s1,
                                 double w_dir) {
        EMFieldValue acc{};
        const double mid = 0.5 * (s0 + s1), half = 0.5 * (s1 - s0);
        for (int k = 0; k < opts.radial_order; ++k) {
            const double s = mid + half * radial.nodes[k];
            const double rho_val = rho.density(s);
            if (rho_val == 0.0) continue;
            const Vec3 y = x - s * u;
            EMFieldValue f;
            try {
                f = evaluate_field(actual, init, y, t, eval_opts).regular;
            } catch (const SingularityError& err) {
                throw QuadratureError(std::string("smeared_field: integrand singular: ") +
                                      err.what());
            }
            acc += (w_dir * half * radial.weights[k] * s * s * rho_val) * f;
        }
        return acc;
    };

    EMFieldValue total{};
    for (std::size_t di = 0; di < dirs.dirs.size(); ++di) {
        const Vec3& u = dirs.dirs[di];
        // cone crossings along y(s) = x - s u: |y - q0| = radius
        double cuts[2];
        int n_cuts = 0;
        if (radius > 0.0) {
            const double b = dot(u, w);  // s^2 - 2 b s + |w|^2 - radius^2 = 0
            const double disc = b * b - (norm2(w) - radius * radius);
            if (disc > 0.0) {
                const double root = std::sqrt(disc);
                for (double c : {b - root, b + root})
                    if (c > 0.0 && c < R) cuts[n_cuts++] = c;
            }
        }
        double lo = 0.0;
        for (int c = 0; c < n_cuts; ++c) {
            total += integrate_segment(u, lo, cuts[c], dirs.weights[di]);
            lo = cuts[c];
        }
        total += integrate_segment(u, lo, R, dirs.weights[di]);
    }

    // Shell contribution: delta integrates to a cap surface integral.
    if (radius > 0.0) {
        const double sgn = tau >= 0.0 ? -1.0 : 1.0;
        std::vector<SingularShell> shells = {
            {q0, actual.momentum(init.t0), actual.mass(), sgn, 1.0, radius},
            {init.aux->position(init.t0), init.aux->momentum(init.t0), init.aux->mass(),
             sgn, -1.0, radius}};
        total += detail::shell_cap_integral(shells, rho, x, radius, opts.cap_polar);
    }

    if (!is_finite(total))
        throw SingularityError("smeared_field: non-finite result");
    return total;
}

}  // namespace lwlab
