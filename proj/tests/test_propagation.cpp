#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "lwlab/propagation.hpp"

using namespace lwlab;

namespace {

std::shared_ptr<TrajectoryHistory> share(TrajectoryHistory h) {
    return std::make_shared<TrajectoryHistory>(std::move(h));
}

TrajectoryHistory oscillator(double mass) {
    return TrajectoryHistory::analytic(mass, [mass](double t) {
        return make_state(mass, Vec3{0.2 * std::sin(t), 0, 0},
                          Vec3{0.2 * std::cos(t), 0, 0},
                          Vec3{-0.2 * std::sin(t), 0, 0});
    });
}

}  // namespace

TEST_CASE("sample points are classified against the data ball", "[propagation]") {
    const TrajectoryHistory actual = oscillator(1.0);
    const InitialFieldSpec init = InitialFieldSpec::coulomb(Vec3{}, 1.0);
    const double t = 1.0;  // ball radius 1 around the origin
    EvalOptions opts;
    opts.throw_on_front = false;
    CHECK(evaluate_field(actual, init, Vec3{0.5, 0, 0}, t, opts).region ==
          ConeRegion::Inside);
    CHECK(evaluate_field(actual, init, Vec3{0, 2.0, 0}, t, opts).region ==
          ConeRegion::Outside);
    CHECK(evaluate_field(actual, init, Vec3{0, 0, 1.0}, t, opts).region ==
          ConeRegion::OnCone);
}

TEST_CASE("outside the ball only the auxiliary mixture survives", "[propagation]") {
    const auto aux = share(TrajectoryHistory::uniform(
        Vec3{}, momentum_from_velocity(Vec3{0.1, 0, 0}, 1.0), 1.0));
    const TrajectoryHistory actual = oscillator(1.0);
    const double lambda = 0.3;
    const InitialFieldSpec init = InitialFieldSpec::from_trajectory(aux, lambda);
    const Vec3 x{0, 3.0, 0};
    const double t = 0.8;  // |x| = 3 > 0.8
    const FieldSample s = evaluate_field(actual, init, x, t);
    const EMFieldValue expect = lambda * lw_field(*aux, x, t, Branch::Retarded) +
                                (1.0 - lambda) * lw_field(*aux, x, t, Branch::Advanced);
    CHECK(max_abs(s.regular - expect) <= 1e-15 * max_abs(expect));
    CHECK(s.shells.empty());
}

TEST_CASE("inside the ball the folded combination applies", "[propagation]") {
    const auto aux = share(TrajectoryHistory::at_rest(Vec3{}, 1.0));
    const TrajectoryHistory actual = oscillator(1.0);
    const double lambda = 0.25;
    const InitialFieldSpec init = InitialFieldSpec::from_trajectory(aux, lambda);
    const Vec3 x{0, 0.4, 0};
    const double t = 2.0;
    const FieldSample s = evaluate_field(actual, init, x, t);
    const EMFieldValue expect =
        lw_field(actual, x, t, Branch::Retarded) +
        (1.0 - lambda) * (lw_field(*aux, x, t, Branch::Advanced) -
                          lw_field(*aux, x, t, Branch::Retarded));
    CHECK(max_abs(s.regular - expect) <= 1e-15 * max_abs(expect));

    SECTION("pure retarded representation needs only the actual history") {
        const InitialFieldSpec pure = InitialFieldSpec::from_trajectory(aux, 1.0);
        const FieldSample sp = evaluate_field(actual, pure, x, t);
        const EMFieldValue ret = lw_field(actual, x, t, Branch::Retarded);
        CHECK(max_abs(sp.regular - ret) == 0.0);
    }
}

TEST_CASE("compact and expanded assemblies agree", "[propagation]") {
    const auto aux = share(TrajectoryHistory::uniform(
        Vec3{}, momentum_from_velocity(Vec3{0.15, 0.05, 0}, 1.0), 1.0));
    const TrajectoryHistory actual = oscillator(1.0);
    for (double lambda : {0.0, 0.5, 1.0}) {
        const InitialFieldSpec init = InitialFieldSpec::from_trajectory(aux, lambda);
        for (double t : {-1.3, 0.4, 2.0}) {
            // note: keep the probe points off the aux world line (v*t collisions)
            for (const Vec3& x : {Vec3{0.3, -0.1, 0}, Vec3{0, 0, 2.5}, Vec3{-1.0, 1.0, 1.0}}) {
                EvalOptions opts;
                opts.throw_on_front = false;
                const FieldSample a = evaluate_field(actual, init, x, t, opts);
                const FieldSample b = evaluate_field_expanded(actual, init, x, t, opts);
                CHECK(max_abs(a.regular - b.regular) <=
                      1e-14 * (1.0 + max_abs(a.regular)));
                CHECK(a.region == b.region);
            }
        }
    }
}

TEST_CASE("advanced-side evaluation mirrors the construction for t < t0",
          "[propagation]") {
    // eternal uniform motion with aux = actual: every representation collapses
    // to the closed-form field, in the past as well as the future
    const Vec3 v{0.4, 0, 0};
    const auto tr = share(
        TrajectoryHistory::uniform(Vec3{}, momentum_from_velocity(v, 1.0), 1.0));
    for (double lambda : {0.0, 0.6, 1.0}) {
        const InitialFieldSpec init = InitialFieldSpec::from_trajectory(tr, lambda);
        for (double t : {-2.0, -0.3}) {
            for (const Vec3& x : {Vec3{0.1, 0.2, 0}, Vec3{0, 1.5, 0}}) {
                EvalOptions opts;
                opts.throw_on_front = false;
                const FieldSample s = evaluate_field(*tr, init, x, t, opts);
                const EMFieldValue closed = boosted_coulomb(x, tr->position(t), v);
                CHECK(max_abs(s.regular - closed) <= 1e-9 * max_abs(closed));
                CHECK(s.net_shell().E.x == 0.0);  // aux shells cancel exactly
            }
        }
    }
}

TEST_CASE("initial data anchored at t0 translates in time", "[propagation]") {
    const double shift = 5.0;
    const TrajectoryHistory actual0 = oscillator(1.0);
    const TrajectoryHistory actual5 = TrajectoryHistory::analytic(
        1.0, [&](double t) { return actual0.state(t - shift); }, shift);
    const auto aux0 = share(TrajectoryHistory::at_rest(Vec3{}, 1.0));
    const InitialFieldSpec init0 = InitialFieldSpec::from_trajectory(aux0, 0.5);
    const InitialFieldSpec init5 =
        InitialFieldSpec::from_trajectory(aux0, 0.5, FreeFieldSpec::zero(), shift);
    for (const Vec3& x : {Vec3{0.5, 0.2, 0}, Vec3{0, 0, 3.0}}) {
        for (double t : {0.3, 1.7, -0.9}) {
            const FieldSample a = evaluate_field(actual0, init0, x, t);
            const FieldSample b = evaluate_field(actual5, init5, x, t + shift);
            CHECK(max_abs(a.regular - b.regular) <= 1e-12 * (1.0 + max_abs(a.regular)));
            CHECK(a.region == b.region);
        }
    }
}

TEST_CASE("front shells appear exactly when the data disagrees with the motion",
          "[propagation]") {
    const double t = 0.75;
    SECTION("matching auxiliary data leaves no net shell") {
        const Vec3 v{0.3, 0, 0};
        const auto tr = share(
            TrajectoryHistory::uniform(Vec3{}, momentum_from_velocity(v, 1.0), 1.0));
        const InitialFieldSpec init = InitialFieldSpec::from_trajectory(tr, 1.0);
        const Vec3 x{0, 0, t};  // |x - q0| = t exactly: on the front
        const FieldSample s = evaluate_field(*tr, init, x, t);  // must not throw
        CHECK(s.region == ConeRegion::OnCone);
        REQUIRE(s.shells.size() == 2);
        CHECK(max_abs(s.net_shell()) == 0.0);
    }
    SECTION("mismatched data raises a singular front on the cone") {
        const Vec3 v{0.3, 0, 0};
        const TrajectoryHistory actual =
            TrajectoryHistory::uniform(Vec3{}, momentum_from_velocity(v, 1.0), 1.0);
        const InitialFieldSpec init = InitialFieldSpec::coulomb(Vec3{}, 1.0);
        const Vec3 x{0, 0, t};
        CHECK_THROWS_AS(evaluate_field(actual, init, x, t), SingularFrontError);
        try {
            evaluate_field(actual, init, x, t);
        } catch (const SingularFrontError& err) {
            CHECK(err.shells.size() == 2);
            CHECK(err.t == t);
            CHECK(norm(err.x - x) == 0.0);
            CHECK(err.shells[0].radius == Catch::Approx(t));
        }
        EvalOptions opts;
        opts.throw_on_front = false;
        const FieldSample s = evaluate_field(actual, init, x, t, opts);
        CHECK(s.region == ConeRegion::OnCone);
        REQUIRE(s.shells.size() == 2);
        CHECK(max_abs(s.net_shell()) > 1e-3);
        // the two shell terms carry opposite strengths around the same sphere
        CHECK(s.shells[0].first.strength == 1.0);
        CHECK(s.shells[1].first.strength == -1.0);
    }
    SECTION("off-cone points never report shells") {
        const TrajectoryHistory actual =
            TrajectoryHistory::uniform(Vec3{}, momentum_from_velocity(Vec3{0.3, 0, 0}, 1.0), 1.0);
        const InitialFieldSpec init = InitialFieldSpec::coulomb(Vec3{}, 1.0);
        CHECK(evaluate_field(actual, init, Vec3{0, 0, 0.5}, t).shells.empty());
        CHECK(evaluate_field(actual, init, Vec3{0, 0, 1.5}, t).shells.empty());
    }
}

TEST_CASE("free field rides on top of the particle field", "[propagation]") {
    const auto aux = share(TrajectoryHistory::at_rest(Vec3{1, 0, 0}, 1.0));
    const TrajectoryHistory actual = TrajectoryHistory::at_rest(Vec3{1, 0, 0}, 1.0);
    const FreeFieldSpec pulse = FreeFieldSpec::gaussian_pulse(
        Vec3{0, 0, 1}, Vec3{}, Vec3{0.5, 0, 0}, 0.3);
    const InitialFieldSpec plain = InitialFieldSpec::from_trajectory(aux, 1.0);
    const InitialFieldSpec with_free =
        InitialFieldSpec::from_trajectory(aux, 1.0, pulse);
    const Vec3 x{0.2, 0.1, 0.4};
    const double t = 0.9;
    const EMFieldValue base = evaluate_field(actual, plain, x, t).regular;
    const EMFieldValue lit = evaluate_field(actual, with_free, x, t).regular;
    const EMFieldValue expected = propagate_free_field(pulse, x, t);
    CHECK(max_abs((lit - base) - expected) <= 1e-15 * (1.0 + max_abs(lit)));
}

TEST_CASE("initial data validation", "[propagation]") {
    const TrajectoryHistory actual = TrajectoryHistory::at_rest(Vec3{}, 1.0);
    CHECK_THROWS_AS(InitialFieldSpec::from_trajectory(nullptr), ConfigError);
    CHECK_THROWS_AS(
        InitialFieldSpec::from_trajectory(share(TrajectoryHistory::at_rest(Vec3{}, 1.0)), 1.5),
        ConfigError);
    // auxiliary trajectory must pass through the charge position at t0
    const InitialFieldSpec off =
        InitialFieldSpec::from_trajectory(share(TrajectoryHistory::at_rest(Vec3{1, 0, 0}, 1.0)));
    CHECK_THROWS_AS(evaluate_field(actual, off, Vec3{0, 2, 0}, 0.5), ConfigError);
}

TEST_CASE("toy sourced expectation is supported inside the cone", "[propagation]") {
    const Vec3 q0{0.5, 0, 0};
    const double g = 2.0;
    CHECK(qft_toy_expectation(g, q0 + Vec3{0.3, 0, 0}, 1.0, q0) ==
          Catch::Approx(-g / (4.0 * pi * 0.3)).epsilon(1e-14));
    CHECK(qft_toy_expectation(g, q0 + Vec3{0.3, 0, 0}, -1.0, q0) ==
          Catch::Approx(-g / (4.0 * pi * 0.3)).epsilon(1e-14));
    CHECK(qft_toy_expectation(g, q0 + Vec3{2.0, 0, 0}, 1.0, q0) == 0.0);
    CHECK(qft_toy_expectation(g, q0 + Vec3{0, 1.0, 0}, 1.0, q0) ==
          Catch::Approx(-g / (4.0 * pi)).epsilon(1e-14));
    CHECK_THROWS_AS(qft_toy_expectation(g, q0, 1.0, q0), SingularityError);
}

TEST_CASE("smearing a static coulomb field sees the shell theorem", "[smeared]") {
    const auto rest = share(TrajectoryHistory::at_rest(Vec3{}, 1.0));
    const InitialFieldSpec init = InitialFieldSpec::from_trajectory(rest, 1.0);
    const Mollifier rho(0.2, 1.0);
    const Vec3 x{0.5, 0, 0};
    SECTION("outside the support the point field is unchanged") {
        // t chosen so the data front slices through the support ball
        for (double t : {0.0, 0.45, 0.7}) {
            const EMFieldValue f = smeared_field(*rest, init, rho, x, t);
            const Vec3 coulomb = x / std::pow(norm(x), 3);
            CHECK(norm(f.E - coulomb) < 1e-7 * norm(coulomb));
            CHECK(norm(f.B) < 1e-12);
        }
    }
    SECTION("averaging over the charge point itself cancels by symmetry") {
        SmearedOptions opts;
        opts.allow_charge_center = true;
        const EMFieldValue f = smeared_field(*rest, init, rho, Vec3{}, 0.3, opts);
        CHECK(max_abs(f) < 1e-12);
    }
    SECTION("points too close to the charge are rejected") {
        CHECK_THROWS_AS(smeared_field(*rest, init, rho, Vec3{0.15, 0, 0}, 0.3),
                        SingularityError);
    }
}

TEST_CASE("smeared field stays bounded and continuous across the front",
          "[smeared]") {
    // coulomb data on a moving charge: the point field has a singular front,
    // the smeared field must cross it continuously
    const Vec3 v{0.3, 0, 0};
    const TrajectoryHistory actual =
        TrajectoryHistory::uniform(Vec3{}, momentum_from_velocity(v, 1.0), 1.0);
    const InitialFieldSpec init = InitialFieldSpec::coulomb(Vec3{}, 1.0);
    const Mollifier rho(0.05, 1.0);
    const double t = 0.6;
    const Vec3 dir{0, 0, 1};  // transverse to the motion
    EMFieldValue prev{};
    bool first = true;
    for (double d : {0.55, 0.58, 0.6, 0.62, 0.65}) {
        const EMFieldValue f = smeared_field(actual, init, rho, d * dir, t);
        CHECK(is_finite(f));
        if (!first) CHECK(max_abs(f - prev) < 0.1 * (1.0 + max_abs(f)));
        prev = f;
        first = false;
    }
}
