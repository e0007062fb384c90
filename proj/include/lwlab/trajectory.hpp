#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lwlab/core.hpp"
#include "lwlab/errors.hpp"

namespace lwlab {

/// Full kinematic state of a charge at one instant.
struct TrajectoryState {
    Vec3 q;  // position
    Vec3 p;  // momentum
    Vec3 v;  // velocity, always v(p)
    Vec3 a;  // coordinate acceleration dv/dt
};

inline TrajectoryState make_state(double mass, const Vec3& q, const Vec3& v,
                                  const Vec3& a) {
    return {q, momentum_from_velocity(v, mass), v, a};
}

/// Behaviour of a trajectory history outside its sampled time range.
struct Extension {
    enum class Kind { None, Inertial, Frozen, Prescribed };

    Kind kind = Kind::Inertial;
    /// Only used for Kind::Prescribed. Must honour the |v| < 1 guard.
    std::function<TrajectoryState(double)> fn;

    static Extension none() { return {Kind::None, nullptr}; }
    static Extension inertial() { return {Kind::Inertial, nullptr}; }
    static Extension frozen() { return {Kind::Frozen, nullptr}; }
    static Extension prescribed(std::function<TrajectoryState(double)> fn) {
        return {Kind::Prescribed, std::move(fn)};
    }
};

/// Retained name from an earlier API revision; extensions apply to both ends.
using PastExtension = Extension;

/// Piecewise record of one charge's motion: nodes (t, q, p, a) with strictly
/// increasing t, cubic Hermite dense output between nodes, and configurable
/// behaviour beyond both ends.
///
/// Interpolation detail: position uses node velocities v(p) as slopes;
/// momentum uses dp/dt reconstructed from (v, a). Queried acceleration is the
/// derivative of the momentum interpolant mapped back through p -> v, which
/// reproduces the node accelerations exactly and is 4th-order accurate in the
/// node spacing in between.
class TrajectoryHistory {
  public:
    struct Node {
        double t;
        Vec3 q, p, a;
    };

    explicit TrajectoryHistory(double mass) : mass_(mass) {
        if (!(mass > 0.0)) throw RangeError("TrajectoryHistory: mass must be positive");
    }

    double mass() const { return mass_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    bool empty() const { return nodes_.empty(); }
    double t_min() const { return front_checked().t; }
    double t_max() const { return back_checked().t; }

    Extension past = Extension::inertial();
    Extension future = Extension::inertial();

    /// Append a sample. Times must be strictly increasing and the speed must
    /// stay below 1 - tol::velocity_margin.
    void append(double t, const Vec3& q, const Vec3& p, const Vec3& a) {
        if (sealed_) throw Error("TrajectoryHistory: append after seal");
        if (!nodes_.empty() && !(t > nodes_.back().t))
            throw RangeError("TrajectoryHistory: node times must strictly increase");
        check_speed(p);
        nodes_.push_back({t, q, p, a});
    }

    /// Freeze the node list. Further appends throw.
    void seal() { sealed_ = true; }
    bool sealed() const { return sealed_; }

    /// Drop all nodes with t > t_cut (used when a run halts mid-step).
    void truncate_after(double t_cut) {
        if (sealed_) throw Error("TrajectoryHistory: truncate after seal");
        while (!nodes_.empty() && nodes_.back().t > t_cut) nodes_.pop_back();
        if (nodes_.empty())
            throw RangeError("TrajectoryHistory: truncation removed every node");
    }

    TrajectoryState state(double t) const {
        const Node& first = front_checked();
        const Node& last = nodes_.back();
        if (t < first.t) return extend(past, first, t, "past");
        if (t > last.t) return extend(future, last, t, "future");
        return interpolate(t);
    }

    Vec3 position(double t) const { return state(t).q; }
    Vec3 momentum(double t) const { return state(t).p; }
    Vec3 velocity(double t) const { return state(t).v; }
    Vec3 acceleration(double t) const { return state(t).a; }

    /// Charge permanently at rest at q0.
    static TrajectoryHistory at_rest(const Vec3& q0, double mass) {
        TrajectoryHistory h(mass);
        h.append(0.0, q0, Vec3{}, Vec3{});
        h.past = Extension::frozen();
        h.future = Extension::frozen();
        return h;
    }

    /// Free motion through q0 with constant momentum p.
    static TrajectoryHistory uniform(const Vec3& q0, const Vec3& p, double mass) {
        TrajectoryHistory h(mass);
        h.append(0.0, q0, p, Vec3{});
        h.past = Extension::inertial();
        h.future = Extension::inertial();
        return h;
    }

    /// Fully analytic trajectory: one anchor node plus a prescribed state
    /// function on both sides. Queries are exact (no interpolation).
    static TrajectoryHistory analytic(double mass,
                                      std::function<TrajectoryState(double)> fn,
                                      double t_anchor = 0.0) {
        TrajectoryHistory h(mass);
        const TrajectoryState s = fn(t_anchor);
        h.append(t_anchor, s.q, s.p, s.a);
        h.past = Extension::prescribed(fn);
        h.future = Extension::prescribed(fn);
        return h;
    }

    /// Sample q, v, a callables on a uniform grid of n+1 nodes over [t0, t1].
    template <class Q, class V, class A>
    static TrajectoryHistory sampled(double mass, double t0, double t1, int n,
                                     Q&& q_fn, V&& v_fn, A&& a_fn) {
        if (n < 1 || !(t1 > t0)) throw RangeError("TrajectoryHistory::sampled: bad grid");
        TrajectoryHistory h(mass);
        for (int i = 0; i <= n; ++i) {
            const double t = t0 + (t1 - t0) * i / n;
            h.append(t, q_fn(t), momentum_from_velocity(v_fn(t), mass), a_fn(t));
        }
        return h;
    }

  private:
    const Node& front_checked() const {
        if (nodes_.empty()) throw RangeError("TrajectoryHistory: no nodes");
        return nodes_.front();
    }
    const Node& back_checked() const { return nodes_.back(); }

    void check_speed(const Vec3& p) const {
        const Vec3 v = relativistic_velocity(p, mass_);
        if (norm(v) > 1.0 - tol::velocity_margin)
            throw RangeError("TrajectoryHistory: speed too close to 1");
    }

    TrajectoryState extend(const Extension& ext, const Node& edge, double t,
                           const char* side) const {
        switch (ext.kind) {
            case Extension::Kind::Inertial: {
                const Vec3 v = relativistic_velocity(edge.p, mass_);
                return {edge.q + (t - edge.t) * v, edge.p, v, Vec3{}};
            }
            case Extension::Kind::Frozen:
                return {edge.q, Vec3{}, Vec3{}, Vec3{}};
            case Extension::Kind::Prescribed: {
                TrajectoryState s = ext.fn(t);
                s.v = relativistic_velocity(s.p, mass_);
                if (norm(s.v) > 1.0 - tol::velocity_margin)
                    throw RangeError("TrajectoryHistory: prescribed extension speed too close to 1");
                return s;
            }
            case Extension::Kind::None:
            default:
                throw RangeError(std::string("TrajectoryHistory: query beyond ") + side +
                                 " end with no extension");
        }
    }

    TrajectoryState interpolate(double t) const {
        // state() guarantees t_min <= t <= t_max, so one node means t is it
        if (nodes_.size() == 1) return node_state(nodes_.front());
        // locate segment: nodes_[i].t <= t <= nodes_[i+1].t
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t,
                                   [](double val, const Node& n) { return val < n.t; });
        if (it == nodes_.begin()) it = std::next(it);
        if (it == nodes_.end()) it = std::prev(it);
        const Node& n1 = *it;
        const Node& n0 = *std::prev(it);
        if (t == n0.t) return node_state(n0);
        if (t == n1.t) return node_state(n1);

        const double h = n1.t - n0.t;
        const double s = (t - n0.t) / h;
        const double s2 = s * s, s3 = s2 * s;
        const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
        const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
        // derivatives of the basis w.r.t. s
        const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1;
        const double d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;

        const Vec3 v0 = relativistic_velocity(n0.p, mass_);
        const Vec3 v1 = relativistic_velocity(n1.p, mass_);
        const Vec3 pdot0 = momentum_rate(v0, n0.a, mass_);
        const Vec3 pdot1 = momentum_rate(v1, n1.a, mass_);

        TrajectoryState out;
        out.q = h00 * n0.q + (h10 * h) * v0 + h01 * n1.q + (h11 * h) * v1;
        out.p = h00 * n0.p + (h10 * h) * pdot0 + h01 * n1.p + (h11 * h) * pdot1;
        const Vec3 pdot =
            (d00 * n0.p + (d10 * h) * pdot0 + d01 * n1.p + (d11 * h) * pdot1) / h;
        out.v = relativistic_velocity(out.p, mass_);
        out.a = accel_from_momentum_rate(out.p, pdot, mass_);
        return out;
    }

    TrajectoryState node_state(const Node& n) const {
        return {n.q, n.p, relativistic_velocity(n.p, mass_), n.a};
    }

    double mass_;
    std::vector<Node> nodes_;
    bool sealed_ = false;
};

}  // namespace lwlab
