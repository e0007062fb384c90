#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lwlab/compatibility.hpp"
#include "lwlab/core.hpp"
#include "lwlab/errors.hpp"
#include "lwlab/mollifier.hpp"
#include "lwlab/propagation.hpp"
#include "lwlab/trajectory.hpp"
#include "lwlab/vec3.hpp"

// Coupled motion of several charges under their mutual fields, written as a
// state-dependent delay system: the force on charge i sums the decomposed
// fields of the other charges at its current position. Marching (retarded
// data on a past stripe) and windowed relaxation (data on both stripes)
// integrators share one RK4 core over (q, p) phase points.

namespace lwlab {

enum class SelfForceModel {
    None,
    /// Nonrelativistic radiation-reaction toy: F = (2/3) e^2 da/dt with a
    /// lagged jerk estimate. Supports runaway solutions by construction.
    AbrahamLorentzDirac,
};

struct IntegratorOptions {
    double step = 1e-3;
    /// Halt when coupled charges get closer than this. Must be at least the
    /// step so that retarded queries during a step stay in sealed history.
    double min_separation = 1e-2;
    long max_steps = 4000000;
};

struct SystemConfig {
    std::vector<double> masses;
    std::vector<double> charges;
    CouplingMatrix coupling;
    double lambda = 1.0;
    std::optional<Mollifier> rho;            // smeared charge density; empty = point
    std::vector<FreeFieldSpec> free_fields;  // free part of each charge's initial field
    double free_anchor = 0.0;                // time of the free fields' analytic slice
    SelfForceModel self_force = SelfForceModel::None;
    IntegratorOptions integrator;
    SmearedOptions smearing;

    int n() const { return static_cast<int>(masses.size()); }

    void validate() const {
        if (masses.empty()) throw ConfigError("charges", "need at least one charge");
        if (charges.size() != masses.size())
            throw ConfigError("charges", "masses and charges must have equal length");
        for (double m : masses)
            if (!(m > 0.0)) throw ConfigError("charges.m", "masses must be positive");
        if (coupling.size() != n())
            throw ConfigError("coupling", "matrix size must match the number of charges");
        if (!(lambda >= 0.0 && lambda <= 1.0))
            throw ConfigError("lambda", "must lie in [0, 1]");
        if (!free_fields.empty() && free_fields.size() != masses.size())
            throw ConfigError("free_fields", "must be empty or one per charge");
        if (!(integrator.step > 0.0)) throw ConfigError("integrator.step", "must be positive");
        if (integrator.min_separation < integrator.step)
            throw ConfigError("integrator.min_separation",
                              "must be at least the integrator step");
        if (!rho && coupling.has_self_coupling())
            throw ConfigError("coupling",
                              "self-coupling of a point charge is singular; provide a "
                              "smeared density");
    }
};

/// Compatible initial-field specs: each charge's auxiliary trajectory is its
/// own initial stripe, with the system lambda and per-charge free field.
inline std::vector<InitialFieldSpec> default_inits(
    const SystemConfig& cfg,
    const std::vector<std::shared_ptr<const TrajectoryHistory>>& stripes, double t0) {
    if (stripes.size() != static_cast<std::size_t>(cfg.n()))
        throw ConfigError("stripes", "one initial stripe per charge required");
    std::vector<InitialFieldSpec> inits;
    inits.reserve(stripes.size());
    for (std::size_t i = 0; i < stripes.size(); ++i) {
        if (!stripes[i]) throw ConfigError("stripes", "null stripe");
        inits.push_back(InitialFieldSpec::from_trajectory(
            stripes[i], cfg.lambda,
            cfg.free_fields.empty() ? FreeFieldSpec::zero() : cfg.free_fields[i], t0));
    }
    return inits;
}

struct FrontEvent {
    int charge = -1;   // charge meeting the front (-1: found mid-stage by the evaluator)
    int source = -1;   // index of the charge whose initial field carries the front
    double t_star = std::numeric_limits<double>::quiet_NaN();
    Vec3 location{};
};

struct IntegrationResult {
    std::vector<TrajectoryHistory> histories;
    std::vector<FrontEvent> events;
    bool halted = false;
    std::string halt_reason;
    double halt_time = std::numeric_limits<double>::quiet_NaN();
};

struct FrontSource {
    double t0 = 0.0;
    Vec3 q0{};
};

/// Earliest time each trajectory meets the forward light cone of each source
/// point: first root of |q_i(t) - q0| = t - t0, by sign scan plus bisection.
/// Since |v| < 1, t* - t0 is at least half the initial distance, with
/// equality d exactly for a static charge.
inline std::vector<FrontEvent> detect_front_crossing(
    const std::vector<TrajectoryHistory>& trajectories,
    const std::vector<FrontSource>& sources, double t_end, double scan_dt = 1e-3) {
    if (!(scan_dt > 0.0)) throw RangeError("detect_front_crossing: scan_dt must be positive");
    std::vector<FrontEvent> events;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const TrajectoryHistory& tr = trajectories[i];
        for (std::size_t s = 0; s < sources.size(); ++s) {
            const FrontSource& src = sources[s];
            auto g = [&](double t) { return norm(tr.position(t) - src.q0) - (t - src.t0); };
            double t_lo = src.t0;
            if (g(t_lo) <= 0.0) continue;  // starts on or inside the cone
            while (t_lo < t_end) {
                const double t_hi = std::min(t_lo + scan_dt, t_end);
                if (g(t_hi) <= 0.0) {
                    double a = t_lo, b = t_hi;
                    for (int it = 0; it < 200 && (b - a) > 1e-13 * (1.0 + std::abs(b));
                         ++it) {
                        const double mid = 0.5 * (a + b);
                        (g(mid) <= 0.0 ? b : a) = mid;
                    }
                    const double t_star = 0.5 * (a + b);
                    events.push_back({static_cast<int>(i), static_cast<int>(s), t_star,
                                      tr.position(t_star)});
                    break;
                }
                t_lo = t_hi;
            }
        }
    }
    return events;
}

namespace detail {

struct PhasePoint {
    std::vector<Vec3> q, p;
};

struct PhaseSlope {
    std::vector<Vec3> dq, dp;
};

inline PhasePoint advance(const PhasePoint& y, double h, const PhaseSlope& k) {
    PhasePoint out = y;
    for (std::size_t i = 0; i < out.q.size(); ++i) {
        out.q[i] += h * k.dq[i];
        out.p[i] += h * k.dp[i];
    }
    return out;
}

/// Field generated by charge `source`, as felt at (x, t) by charge `target`.
using SourceField = std::function<EMFieldValue(int source, int target, const Vec3& x,
                                               double t)>;

inline std::vector<Vec3> lorentz_forces(const SystemConfig& cfg, const PhasePoint& y,
                                        double t, const SourceField& field_of,
                                        const std::vector<Vec3>& ald_jerk) {
    const int n = cfg.n();
    std::vector<Vec3> F(n);
    for (int i = 0; i < n; ++i) {
        const Vec3 v = relativistic_velocity(y.p[i], cfg.masses[i]);
        Vec3 f{};
        for (int j = 0; j < n; ++j) {
            const double e = cfg.coupling.at(i, j);
            if (e == 0.0) continue;
            const EMFieldValue fj = field_of(j, i, y.q[i], t);
            f += (e * cfg.charges[i]) * (fj.E + cross(v, fj.B));
        }
        if (cfg.self_force == SelfForceModel::AbrahamLorentzDirac)
            f += (2.0 / 3.0) * cfg.charges[i] * cfg.charges[i] * ald_jerk[i];
        F[i] = f;
    }
    return F;
}

inline PhaseSlope slopes(const SystemConfig& cfg, const PhasePoint& y, double t,
                         const SourceField& field_of, const std::vector<Vec3>& ald_jerk) {
    PhaseSlope k;
    k.dp = lorentz_forces(cfg, y, t, field_of, ald_jerk);
    k.dq.resize(y.q.size());
    for (std::size_t i = 0; i < y.q.size(); ++i)
        k.dq[i] = relativistic_velocity(y.p[i], cfg.masses[i]);
    return k;
}

/// Lagged one-sided jerk estimate from the last two stored accelerations.
inline std::vector<Vec3> lagged_jerks(const std::vector<TrajectoryHistory>& hist) {
    std::vector<Vec3> jerks(hist.size(), Vec3{});
    for (std::size_t i = 0; i < hist.size(); ++i) {
        const auto& ns = hist[i].nodes();
        if (ns.size() >= 2) {
            const auto& a = ns[ns.size() - 2];
            const auto& b = ns.back();
            jerks[i] = (b.a - a.a) / (b.t - a.t);
        }
    }
    return jerks;
}

}  // namespace detail

/// March the retarded system forward from a common stripe end time. Each
/// charge's field is its decomposed initial-value field, so incompatible
/// initial data carries a singular front: a point charge reaching the front
/// of another charge halts the run at the detected crossing time, while
/// smeared charges pass through with the event recorded.
inline IntegrationResult integrate_retarded(
    const SystemConfig& cfg,
    const std::vector<std::shared_ptr<const TrajectoryHistory>>& stripes,
    const std::vector<InitialFieldSpec>& inits, double horizon) {
    cfg.validate();
    const int n = cfg.n();
    if (stripes.size() != static_cast<std::size_t>(n) ||
        inits.size() != static_cast<std::size_t>(n))
        throw ConfigError("stripes", "need one stripe and one initial field per charge");
    for (const auto& s : stripes)
        if (!s) throw ConfigError("stripes", "null stripe");
    const double t0 = stripes[0]->t_max();
    for (int i = 0; i < n; ++i) {
        if (std::abs(stripes[i]->t_max() - t0) > 1e-12 * (1.0 + std::abs(t0)))
            throw ConfigError("stripes", "stripes must end at a common time");
        if (std::abs(inits[i].t0 - t0) > 1e-12 * (1.0 + std::abs(t0)))
            throw ConfigError("initial_field.t0",
                              "initial fields must be posed at the stripe end time");
    }
    if (!(horizon > 0.0)) throw ConfigError("horizon", "must be positive");
    const double h = cfg.integrator.step;

    IntegrationResult out;
    out.histories.reserve(n);
    detail::PhasePoint y;
    y.q.resize(n);
    y.p.resize(n);
    for (int i = 0; i < n; ++i) {
        auto stripe = stripes[i];
        TrajectoryHistory w(stripe->mass());
        w.past = Extension::prescribed([stripe](double t) { return stripe->state(t); });
        y.q[i] = stripe->position(t0);
        y.p[i] = stripe->momentum(t0);
        out.histories.push_back(std::move(w));
    }

    EvalOptions field_opts;  // exact on-front hits surface as SingularFrontError
    detail::SourceField field_of = [&](int j, int i, const Vec3& x, double t) {
        // before the first node lands (the t0 force pass) the stripe is the source
        const TrajectoryHistory& src =
            out.histories[j].empty() ? *stripes[j] : out.histories[j];
        EMFieldValue f;
        if (cfg.rho) {
            SmearedOptions sopts = cfg.smearing;
            sopts.allow_charge_center = (i == j);
            // Self-fields are taken at the source's own center, where the ray
            // quadrature is regular; stage points sit O(h^2) off the center.
            const Vec3 x_eval = (i == j) ? src.position(t) : x;
            f = smeared_field(src, inits[j], *cfg.rho, x_eval, t, sopts);
        } else {
            f = evaluate_field(src, inits[j], x, t, field_opts).regular;
        }
        return cfg.charges[j] * f;
    };

    // Active singular fronts: charges whose initial field fails (C1).
    struct Monitor {
        int charge, source;
        Vec3 q0;
    };
    std::vector<Monitor> monitors;
    for (int j = 0; j < n; ++j) {
        if (check_c1(*stripes[j], inits[j]).pass) continue;
        const Vec3 q0j = stripes[j]->position(t0);
        for (int i = 0; i < n; ++i)
            if (i != j && cfg.coupling.at(i, j) != 0.0) monitors.push_back({i, j, q0j});
    }

    auto halt = [&](const std::string& reason, double t_halt) {
        out.halted = true;
        out.halt_reason = reason;
        out.halt_time = t_halt;
    };

    auto separation_ok = [&](const detail::PhasePoint& s) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                if (cfg.coupling.at(i, j) == 0.0 && cfg.coupling.at(j, i) == 0.0) continue;
                if (norm(s.q[i] - s.q[j]) < cfg.integrator.min_separation) return false;
            }
        return true;
    };

    if (!separation_ok(y))
        throw ConfigError("stripes", "charges closer than min_separation at the start");

    double t = t0;
    std::vector<Vec3> jerks(n, Vec3{});
    std::optional<detail::PhaseSlope> k1_cache;
    {
        const auto F0 = detail::lorentz_forces(cfg, y, t0, field_of, jerks);
        for (int i = 0; i < n; ++i)
            out.histories[i].append(t0, y.q[i], y.p[i],
                                    accel_from_momentum_rate(y.p[i], F0[i], cfg.masses[i]));
        detail::PhaseSlope k1;
        k1.dp = F0;
        k1.dq.resize(n);
        for (int i = 0; i < n; ++i)
            k1.dq[i] = relativistic_velocity(y.p[i], cfg.masses[i]);
        k1_cache = std::move(k1);
    }

    const double t_end = t0 + horizon;
    long steps = 0;
    while (t < t_end - 1e-12 * (1.0 + std::abs(t_end)) && !out.halted) {
        if (++steps > cfg.integrator.max_steps)
            throw IterationError("integrate_retarded: step cap reached",
                                 static_cast<int>(steps), t);
        const double hk = std::min(h, t_end - t);
        const double t_new = t + hk;

        detail::PhasePoint y_new;
        std::vector<Vec3> F_end;
        try {
            if (cfg.self_force == SelfForceModel::AbrahamLorentzDirac)
                jerks = detail::lagged_jerks(out.histories);
            const detail::PhaseSlope k1 = std::move(*k1_cache);
            const auto k2 =
                detail::slopes(cfg, detail::advance(y, hk / 2, k1), t + hk / 2, field_of, jerks);
            const auto k3 =
                detail::slopes(cfg, detail::advance(y, hk / 2, k2), t + hk / 2, field_of, jerks);
            const auto k4 = detail::slopes(cfg, detail::advance(y, hk, k3), t_new, field_of, jerks);
            y_new = y;
            for (int i = 0; i < n; ++i) {
                y_new.q[i] += hk / 6.0 * (k1.dq[i] + 2.0 * k2.dq[i] + 2.0 * k3.dq[i] + k4.dq[i]);
                y_new.p[i] += hk / 6.0 * (k1.dp[i] + 2.0 * k2.dp[i] + 2.0 * k3.dp[i] + k4.dp[i]);
            }
            F_end = detail::lorentz_forces(cfg, y_new, t_new, field_of, jerks);
        } catch (const SingularFrontError& err) {
            out.events.push_back({-1, -1, err.t, err.x});
            halt("singular-front", t);
            break;
        }

        bool finite = true;
        for (int i = 0; i < n; ++i)
            finite = finite && is_finite(y_new.q[i]) && is_finite(y_new.p[i]);
        if (!finite) {
            halt("non-finite state", t);
            break;
        }
        for (int i = 0; i < n; ++i)
            out.histories[i].append(t_new, y_new.q[i], y_new.p[i],
                                    accel_from_momentum_rate(y_new.p[i], F_end[i],
                                                             cfg.masses[i]));

        bool guard_tripped = false;
        for (int i = 0; i < n && !guard_tripped; ++i)
            if (norm(relativistic_velocity(y_new.p[i], cfg.masses[i])) >
                1.0 - tol::velocity_margin) {
                halt("velocity-guard", t_new);
                guard_tripped = true;
            }
        if (!guard_tripped && !separation_ok(y_new)) {
            halt("min-separation", t_new);
            guard_tripped = true;
        }

        // Front crossings: the dense segment just appended brackets the root.
        for (auto it = monitors.begin(); it != monitors.end() && !out.halted;) {
            const Monitor& mon = *it;
            auto g = [&](double s) {
                return norm(out.histories[mon.charge].position(s) - mon.q0) - (s - t0);
            };
            if (g(t_new) > 0.0) {
                ++it;
                continue;
            }
            double a = t, b = t_new;
            if (g(a) <= 0.0) {
                b = a;  // crossed exactly at a node; take it
            } else {
                for (int bi = 0; bi < 200 && (b - a) > 1e-13 * (1.0 + std::abs(b)); ++bi) {
                    const double mid = 0.5 * (a + b);
                    (g(mid) <= 0.0 ? b : a) = mid;
                }
            }
            const double t_star = 0.5 * (a + b);
            out.events.push_back({mon.charge, mon.source, t_star,
                                  out.histories[mon.charge].position(t_star)});
            if (!cfg.rho) {
                // point charge meets a genuine delta front: dynamics end here
                std::vector<TrajectoryState> states;
                states.reserve(n);
                for (int i = 0; i < n; ++i) states.push_back(out.histories[i].state(t_star));
                for (int i = 0; i < n; ++i) {
                    out.histories[i].truncate_after(t_star);
                    if (out.histories[i].t_max() < t_star)
                        out.histories[i].append(t_star, states[i].q, states[i].p,
                                                states[i].a);
                }
                halt("singular-front", t_star);
            } else {
                it = monitors.erase(it);
                continue;
            }
            ++it;
        }
        if (out.halted) break;

        y = std::move(y_new);
        t = t_new;
        detail::PhaseSlope k1_next;
        k1_next.dp = std::move(F_end);
        k1_next.dq.resize(n);
        for (int i = 0; i < n; ++i)
            k1_next.dq[i] = relativistic_velocity(y.p[i], cfg.masses[i]);
        k1_cache = std::move(k1_next);
    }

    for (auto& w : out.histories) w.seal();
    return out;
}

struct RelaxationOptions {
    int max_iterations = 40;
    double tolerance = 1e-9;  // sup-norm position change between sweeps
    int compare_samples = 64;
};

struct RelaxationResult {
    std::vector<TrajectoryHistory> histories;
    int iterations = 0;
    std::vector<double> trace;  // sup-norm change per sweep
    bool converged = false;
};

/// Picard iteration for the boundary-value form on [-T, T]: given frozen
/// trajectories from the previous sweep, each charge moves under the
/// lambda-weighted retarded/advanced fields of the others, starting from the
/// past-stripe endpoint. Data outside the window is held fixed: the past
/// stripes always, the future stripes when given (otherwise inertial
/// continuation of each iterate).
inline RelaxationResult integrate_relaxation(
    const SystemConfig& cfg,
    const std::vector<std::shared_ptr<const TrajectoryHistory>>& past_stripes,
    double window, const RelaxationOptions& ropts = {},
    const std::vector<std::shared_ptr<const TrajectoryHistory>>* future_stripes = nullptr) {
    cfg.validate();
    if (cfg.self_force != SelfForceModel::None)
        throw ConfigError("self_force", "relaxation does not take a self-force term");
    const int n = cfg.n();
    if (past_stripes.size() != static_cast<std::size_t>(n))
        throw ConfigError("stripes", "one past stripe per charge required");
    if (future_stripes && future_stripes->size() != static_cast<std::size_t>(n))
        throw ConfigError("stripes", "one future stripe per charge required");
    if (!(window > 0.0)) throw ConfigError("horizon", "window must be positive");
    const double t_a = -window, t_b = window;
    for (const auto& s : past_stripes) {
        if (!s) throw ConfigError("stripes", "null stripe");
        if (std::abs(s->t_max() - t_a) > 1e-9 * (1.0 + window))
            throw ConfigError("stripes", "past stripes must end at -window");
    }

    // iterate 0: inertial continuation of the past data
    std::vector<TrajectoryHistory> prev;
    prev.reserve(n);
    for (int i = 0; i < n; ++i) {
        auto stripe = past_stripes[i];
        TrajectoryHistory w(stripe->mass());
        w.past = Extension::prescribed([stripe](double t) { return stripe->state(t); });
        const TrajectoryState s0 = stripe->state(t_a);
        w.append(t_a, s0.q, s0.p, Vec3{});
        if (future_stripes) {
            auto fut = (*future_stripes)[i];
            w.future = Extension::prescribed([fut](double t) { return fut->state(t); });
        }
        prev.push_back(std::move(w));
    }

    RelaxationResult out;
    const double h = cfg.integrator.step;
    for (int sweep = 1; sweep <= ropts.max_iterations; ++sweep) {
        // Smeared sources go through the decomposed evaluator with the iterate
        // as its own auxiliary trajectory; that is identically the
        // lambda-weighted two-branch field (the shell pair cancels exactly).
        std::vector<std::shared_ptr<const TrajectoryHistory>> prev_shared;
        std::vector<InitialFieldSpec> prev_inits;
        if (cfg.rho) {
            for (int j = 0; j < n; ++j) {
                prev_shared.push_back(std::make_shared<TrajectoryHistory>(prev[j]));
                prev_inits.push_back(InitialFieldSpec::from_trajectory(
                    prev_shared[j], cfg.lambda,
                    cfg.free_fields.empty() ? FreeFieldSpec::zero() : cfg.free_fields[j],
                    cfg.free_anchor));
            }
        }
        detail::SourceField field_of = [&](int j, int i, const Vec3& x, double t) {
            EMFieldValue f{};
            if (cfg.rho) {
                SmearedOptions sopts = cfg.smearing;
                sopts.allow_charge_center = (i == j);
                const Vec3 x_eval = (i == j) ? prev_shared[j]->position(t) : x;
                f = smeared_field(*prev_shared[j], prev_inits[j], *cfg.rho, x_eval, t,
                                  sopts);
            } else {
                if (cfg.lambda != 0.0)
                    f += cfg.lambda * lw_field(prev[j], x, t, Branch::Retarded);
                if (cfg.lambda != 1.0)
                    f += (1.0 - cfg.lambda) * lw_field(prev[j], x, t, Branch::Advanced);
                if (!cfg.free_fields.empty())
                    f += propagate_free_field(cfg.free_fields[j], x,
                                              t - cfg.free_anchor);
            }
            return cfg.charges[j] * f;
        };

        std::vector<TrajectoryHistory> cur;
        cur.reserve(n);
        detail::PhasePoint y;
        y.q.resize(n);
        y.p.resize(n);
        for (int i = 0; i < n; ++i) {
            auto stripe = past_stripes[i];
            TrajectoryHistory w(stripe->mass());
            w.past = Extension::prescribed([stripe](double t) { return stripe->state(t); });
            y.q[i] = stripe->position(t_a);
            y.p[i] = stripe->momentum(t_a);
            cur.push_back(std::move(w));
        }

        std::vector<Vec3> no_jerk(n, Vec3{});
        auto F = detail::lorentz_forces(cfg, y, t_a, field_of, no_jerk);
        for (int i = 0; i < n; ++i)
            cur[i].append(t_a, y.q[i], y.p[i],
                          accel_from_momentum_rate(y.p[i], F[i], cfg.masses[i]));

        double t = t_a;
        long steps = 0;
        while (t < t_b - 1e-12 * (1.0 + window)) {
            if (++steps > cfg.integrator.max_steps)
                throw IterationError("integrate_relaxation: step cap reached",
                                     static_cast<int>(steps), t);
            const double hk = std::min(h, t_b - t);
            const auto k1 = detail::slopes(cfg, y, t, field_of, no_jerk);
            const auto k2 =
                detail::slopes(cfg, detail::advance(y, hk / 2, k1), t + hk / 2, field_of, no_jerk);
            const auto k3 =
                detail::slopes(cfg, detail::advance(y, hk / 2, k2), t + hk / 2, field_of, no_jerk);
            const auto k4 =
                detail::slopes(cfg, detail::advance(y, hk, k3), t + hk, field_of, no_jerk);
            for (int i = 0; i < n; ++i) {
                y.q[i] += hk / 6.0 * (k1.dq[i] + 2.0 * k2.dq[i] + 2.0 * k3.dq[i] + k4.dq[i]);
                y.p[i] += hk / 6.0 * (k1.dp[i] + 2.0 * k2.dp[i] + 2.0 * k3.dp[i] + k4.dp[i]);
            }
            t += hk;
            const auto Fe = detail::lorentz_forces(cfg, y, t, field_of, no_jerk);
            for (int i = 0; i < n; ++i)
                cur[i].append(t, y.q[i], y.p[i],
                              accel_from_momentum_rate(y.p[i], Fe[i], cfg.masses[i]));
        }
        for (int i = 0; i < n; ++i) {
            if (future_stripes) {
                auto fut = (*future_stripes)[i];
                cur[i].future =
                    Extension::prescribed([fut](double t_q) { return fut->state(t_q); });
            }
        }

        double delta = 0.0;
        for (int i = 0; i < n; ++i)
            for (int s = 0; s <= ropts.compare_samples; ++s) {
                const double ts = t_a + (t_b - t_a) * s / ropts.compare_samples;
                delta = std::max(delta, norm(cur[i].position(ts) - prev[i].position(ts)));
            }
        out.trace.push_back(delta);
        out.iterations = sweep;
        prev = std::move(cur);
        if (delta < ropts.tolerance) {
            out.converged = true;
            break;
        }
    }
    if (!out.converged) {
        std::string msg = "integrate_relaxation: no fixed point within cap; trace:";
        for (double d : out.trace) msg += " " + std::to_string(d);
        throw IterationError(msg, out.iterations, out.trace.back());
    }
    for (auto& w : prev) w.seal();
    out.histories = std::move(prev);
    return out;
}

struct ResidualReport {
    double max_residual = 0.0;
    double mean_residual = 0.0;
    int samples = 0;
};

/// Defect of a computed solution in the equation of motion: dp/dt from the
/// dense trajectory output minus the Lorentz force re-evaluated from the
/// decomposed fields, at off-node sample times.
inline ResidualReport dynamics_residual(const SystemConfig& cfg,
                                        const std::vector<TrajectoryHistory>& hist,
                                        const std::vector<InitialFieldSpec>& inits,
                                        double t_lo, double t_hi, int samples) {
    if (cfg.self_force != SelfForceModel::None)
        throw ConfigError("self_force", "residual check covers field coupling only");
    if (samples < 1) throw RangeError("dynamics_residual: need at least one sample");
    const int n = cfg.n();
    ResidualReport rep;
    rep.samples = samples;
    double sum = 0.0;
    for (int s = 0; s < samples; ++s) {
        const double t = t_lo + (t_hi - t_lo) * (s + 0.37) / samples;
        for (int i = 0; i < n; ++i) {
            const TrajectoryState st = hist[i].state(t);
            const Vec3 lhs = momentum_rate(st.v, st.a, cfg.masses[i]);
            Vec3 rhs{};
            for (int j = 0; j < n; ++j) {
                const double e = cfg.coupling.at(i, j);
                if (e == 0.0) continue;
                EMFieldValue f;
                if (cfg.rho) {
                    SmearedOptions sopts = cfg.smearing;
                    sopts.allow_charge_center = (i == j);
                    f = smeared_field(hist[j], inits[j], *cfg.rho, st.q, t, sopts);
                } else {
                    f = evaluate_field(hist[j], inits[j], st.q, t).regular;
                }
                rhs += (e * cfg.charges[i] * cfg.charges[j]) * (f.E + cross(st.v, f.B));
            }
            const double r = norm(lhs - rhs);
            rep.max_residual = std::max(rep.max_residual, r);
            sum += r;
        }
    }
    rep.mean_residual = sum / (samples * n);
    return rep;
}

struct RunawayReport {
    double fitted_rate = 0.0;
    double predicted_rate = 0.0;
    double a_start = 0.0;
    double a_end = 0.0;
    double horizon = 0.0;
};

/// Free nonrelativistic motion with the radiation-reaction toy force alone:
/// m a = (2/3) e^2 da/dt, so any nonzero acceleration seed grows like
/// exp(t * 3 m / (2 e^2)). Integrates the (v, a) system and fits the rate.
inline RunawayReport ald_runaway_probe(double mass, double charge, double a_seed,
                                       double horizon, double step = 1e-4) {
    if (!(mass > 0.0)) throw RangeError("ald_runaway_probe: mass must be positive");
    if (charge == 0.0) throw RangeError("ald_runaway_probe: charge must be nonzero");
    if (a_seed == 0.0) throw RangeError("ald_runaway_probe: need a nonzero seed");
    if (!(horizon > 0.0 && step > 0.0))
        throw RangeError("ald_runaway_probe: horizon and step must be positive");
    const double rate = 3.0 * mass / (2.0 * charge * charge);
    double v = 0.0, a = a_seed, t = 0.0;
    while (t < horizon - 1e-15) {
        const double h = std::min(step, horizon - t);
        // dv/dt = a, da/dt = rate * a
        const double k1v = a, k1a = rate * a;
        const double k2v = a + h / 2 * k1a, k2a = rate * (a + h / 2 * k1a);
        const double k3v = a + h / 2 * k2a, k3a = rate * (a + h / 2 * k2a);
        const double k4v = a + h * k3a, k4a = rate * (a + h * k3a);
        v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
        a += h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a);
        t += h;
    }
    RunawayReport rep;
    rep.predicted_rate = rate;
    rep.a_start = a_seed;
    rep.a_end = a;
    rep.horizon = horizon;
    rep.fitted_rate = std::log(std::abs(a / a_seed)) / horizon;
    return rep;
}

struct SelfConsistentAdaptOptions {
    AdaptOptions adapt{};
    double local_horizon = 0.05;  // length of the preliminary forward solve
    int max_iterations = 16;
    double tolerance = 1e-8;  // sup-norm initial-acceleration change
};

struct SelfConsistentAdaptResult {
    std::vector<InitialFieldSpec> inits;
    int iterations = 0;
    std::vector<double> trace;
    bool converged = false;
};

/// Make every charge's initial field compatible with the motion the system
/// actually produces: solve forward on a short horizon, adapt each auxiliary
/// trajectory to the solution jet, and repeat until the adapted specs stop
/// changing. With self-interaction the initial acceleration depends on the
/// charge's own adapted field, hence the fixed-point loop.
inline SelfConsistentAdaptResult adapt_initial_fields(
    const SystemConfig& cfg,
    const std::vector<std::shared_ptr<const TrajectoryHistory>>& stripes,
    std::vector<InitialFieldSpec> inits, const SelfConsistentAdaptOptions& opts = {}) {
    cfg.validate();
    if (!(opts.local_horizon > 0.0))
        throw ConfigError("adapt.local_horizon", "must be positive");
    SelfConsistentAdaptResult out;
    std::vector<Vec3> a_prev(cfg.n(), Vec3{});
    bool have_prev = false;
    for (int sweep = 1; sweep <= opts.max_iterations; ++sweep) {
        out.iterations = sweep;
        IntegrationResult sol = integrate_retarded(cfg, stripes, inits, opts.local_horizon);
        if (sol.halted)
            throw Error("adapt_initial_fields: preliminary solve halted (" +
                        sol.halt_reason + "); shrink local_horizon");
        std::vector<Vec3> a_now(cfg.n());
        for (int i = 0; i < cfg.n(); ++i) a_now[i] = sol.histories[i].nodes().front().a;
        if (have_prev) {
            double delta = 0.0;
            for (int i = 0; i < cfg.n(); ++i)
                delta = std::max(delta, norm(a_now[i] - a_prev[i]));
            out.trace.push_back(delta);
        }
        a_prev = a_now;
        have_prev = true;

        bool changed = false;
        for (int i = 0; i < cfg.n(); ++i) {
            InitialFieldSpec adapted =
                adapt_initial_field(sol.histories[i], inits[i], opts.adapt);
            if (adapted.aux != inits[i].aux) changed = true;
            inits[i] = std::move(adapted);
        }
        if (!changed && (out.trace.empty() || out.trace.back() < opts.tolerance)) {
            out.converged = true;
            break;
        }
    }
    if (!out.converged)
        throw IterationError("adapt_initial_fields: no fixed point within cap",
                             out.iterations,
                             out.trace.empty() ? 0.0 : out.trace.back());
    out.inits = std::move(inits);
    return out;
}

}  // namespace lwlab
