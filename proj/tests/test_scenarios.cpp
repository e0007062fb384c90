#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lwlab/lwlab.hpp"

using namespace lwlab;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<std::string> dir_files(const std::filesystem::path& d) {
    std::vector<std::string> names;
    for (const auto& e : std::filesystem::directory_iterator(d))
        names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace

TEST_CASE("quantitative example report matches hand-evaluated SI arithmetic") {
    const PaperExampleReport r = scenario_paper_example();

    // independent recomputation with a different association order
    const double k = 1.0 / (4.0 * pi * si::vacuum_permittivity);
    const double c = si::speed_of_light;
    const double E1_alt =
        -k * si::elementary_charge * 1e13 * 1e17 / (c * c * 1e2);
    const double a2_alt = E1_alt * si::elementary_charge / si::electron_mass;
    const double qZ_si = 1e13 * si::elementary_charge;
    const double P2_alt =
        (2.0 / 3.0) * (qZ_si * a2_alt) * (qZ_si * a2_alt) /
        (6.0 * pi * si::vacuum_permittivity) / (c * c * c);

    CHECK(r.E1x_si == Catch::Approx(E1_alt).epsilon(1e-12));
    CHECK(r.a2x_si == Catch::Approx(a2_alt).epsilon(1e-12));
    CHECK(r.P2_si == Catch::Approx(P2_alt).epsilon(1e-12));

    // pinned values
    CHECK(r.E1x_si == Catch::Approx(-160.21766348722556).epsilon(1e-13));
    CHECK(r.a2x_si == Catch::Approx(-28179403262049.285).epsilon(1e-13));
    CHECK(r.P2_si == Catch::Approx(0.30219073907249139).epsilon(1e-13));
    // single IEEE divisions of exact inputs: the results are exact doubles
    CHECK(r.rise_time_si == 1e-6);
    CHECK(r.t_star_si == 3.3356409519815204e-07);

    CHECK(r.E1x_si < 0.0);
    CHECK(r.a2x_si < 0.0);
    CHECK(r.P2_si > 0.28);
    CHECK(r.P2_si < 0.33);

    // natural-units round trip reproduces the direct arithmetic
    CHECK(r.E1x_cross == Catch::Approx(r.E1x_si).epsilon(1e-10));
    CHECK(r.a2x_cross == Catch::Approx(r.a2x_si).epsilon(1e-10));
    CHECK(r.P2_cross == Catch::Approx(r.P2_si).epsilon(1e-10));
}

TEST_CASE("coulomb front with a resting charge reproduces the static field") {
    CoulombFrontOptions opts;
    opts.p0 = Vec3{};
    opts.n_per_axis = 8;  // even count keeps the charge position off the grid
    const CoulombFrontData data = scenario_coulomb_front(opts);

    REQUIRE(data.rows.size() == 8u * 8u * 8u * 3u);
    int inside = 0, outside = 0;
    for (const FieldRow& row : data.rows) {
        const double r = norm(row.x);
        REQUIRE(r > 0.1);
        const Vec3 expect = row.x / (r * r * r);
        CHECK(norm(row.f.E - expect) <= 1e-9 * (1.0 + norm(expect)));
        CHECK(norm(row.f.B) <= 1e-14);
        if (row.region == ConeRegion::Inside) ++inside;
        if (row.region == ConeRegion::Outside) ++outside;
    }
    CHECK(inside > 100);
    CHECK(outside > 100);

    // matching front data: the two shell coefficients cancel identically
    REQUIRE(data.shell_report.size() == 36u);
    for (const ShellSampleRow& row : data.shell_report) {
        CHECK(max_abs(row.actual_coeff) > 0.0);
        CHECK(max_abs(row.net) == 0.0);
    }
}

TEST_CASE("coulomb front with a moving charge carries unbalanced shells") {
    const CoulombFrontData data = scenario_coulomb_front();

    REQUIRE(data.rows.size() == 9u * 9u * 9u * 3u);
    int inside = 0, outside = 0, on_cone = 0;
    for (const FieldRow& row : data.rows) {
        CHECK(is_finite(row.f));
        if (row.region == ConeRegion::Inside) ++inside;
        if (row.region == ConeRegion::Outside) ++outside;
        if (row.region == ConeRegion::OnCone) {
            ++on_cone;
            CHECK(row.shell_count == 2);
        }
    }
    CHECK(inside > 100);
    CHECK(outside > 100);
    // axis points such as (0.5, 0, 0) at t = 0.5 sit exactly on the front
    CHECK(on_cone >= 18);

    REQUIRE(data.shell_report.size() == 36u);
    double worst_net = 0.0;
    int nonzero = 0;
    for (const ShellSampleRow& row : data.shell_report) {
        CHECK(max_abs((row.actual_coeff + row.aux_coeff) - row.net) == 0.0);
        CHECK(max_abs(row.actual_coeff) > 1e-4);
        CHECK(max_abs(row.aux_coeff) > 1e-4);
        worst_net = std::max(worst_net, max_abs(row.net));
        if (max_abs(row.net) > 1e-8) ++nonzero;
    }
    CHECK(worst_net > 1e-2);
    CHECK(nonzero >= 30);
}

TEST_CASE("retarded line preset halts on the singular front near t = 1") {
    const TwoBodyData d = scenario_two_body(TwoBodyPreset::RetardedLine);

    CHECK_FALSE(d.setup.use_relaxation);
    CHECK_FALSE(d.artifacts.used_relaxation);
    REQUIRE(d.artifacts.halted);
    CHECK(d.artifacts.halt_reason == "singular-front");

    REQUIRE(d.artifacts.events.size() == 1u);
    const FrontEvent& ev = d.artifacts.events.front();
    CHECK(ev.charge == 1);
    CHECK(ev.source == 0);
    // the witness drifts outward under the initial Coulomb field, so the
    // front catches it slightly after the initial separation
    CHECK(ev.t_star > 1.0);
    CHECK(ev.t_star < 1.01);
    CHECK(d.artifacts.halt_time == Catch::Approx(ev.t_star).margin(1e-12));
    CHECK(norm(ev.location - Vec3{ev.t_star, 0.0, 0.0}) < 1e-4);

    REQUIRE(d.artifacts.histories.size() == 2u);
    for (const TrajectoryHistory& h : d.artifacts.histories) {
        CHECK(h.t_max() <= ev.t_star + 1e-9);
        CHECK(h.t_max() > ev.t_star - 2e-3);
    }
}

TEST_CASE("retarded line preset with adapted initial data clears the front") {
    TwoBodyOptions opts;
    opts.adapt = true;
    const TwoBodyData d = scenario_two_body(TwoBodyPreset::RetardedLine, opts);

    REQUIRE(d.adapt_result.has_value());
    CHECK(d.adapt_result->converged);
    CHECK(d.adapt_result->iterations >= 1);

    CHECK_FALSE(d.artifacts.halted);
    CHECK(d.artifacts.events.empty());
    REQUIRE(d.artifacts.histories.size() == 2u);
    CHECK(d.artifacts.histories[0].t_max() >= 2.0 - 1e-3);
    CHECK(d.artifacts.histories[1].t_max() >= 2.0 - 1e-3);

    // charge 0 keeps drifting forward, charge 1 is pushed off its rest point
    const double x0 = d.artifacts.histories[0].position(2.0 - 1e-3).x;
    const double x1 = d.artifacts.histories[1].position(2.0 - 1e-3).x;
    CHECK(x0 > 0.2);
    CHECK(x0 < 0.45);
    CHECK(x1 > 1.0005);
    CHECK(x1 > x0 + 0.5);
}

TEST_CASE("symmetric window preset relaxes to a mirror-symmetric repulsion") {
    const TwoBodyData d = scenario_two_body(TwoBodyPreset::FSTWindow);

    CHECK(d.setup.use_relaxation);
    REQUIRE(d.artifacts.used_relaxation);
    CHECK(d.artifacts.relaxation_converged);
    REQUIRE(d.artifacts.relaxation_iterations >= 1);
    REQUIRE(d.artifacts.relaxation_trace.size() ==
            static_cast<std::size_t>(d.artifacts.relaxation_iterations));
    const std::vector<double>& trace = d.artifacts.relaxation_trace;
    for (std::size_t k = 1; k + 1 < trace.size(); ++k)
        CHECK(trace[k + 1] <= trace[k] + 1e-12);
    CHECK(trace.back() < 1e-9);

    REQUIRE(d.artifacts.histories.size() == 2u);
    const TrajectoryHistory& h0 = d.artifacts.histories[0];
    const TrajectoryHistory& h1 = d.artifacts.histories[1];
    CHECK(h0.t_min() == Catch::Approx(-0.75).margin(1e-9));
    CHECK(h0.t_max() >= 0.75 - 1e-9);

    for (double t : {-0.5, 0.0, 0.3, 0.7}) {
        const Vec3 a = h0.position(t);
        const Vec3 b = h1.position(t);
        CHECK(norm(a + b) < 1e-7);  // Jacobi sweeps preserve the mirror
        CHECK(std::abs(a.y) < 1e-10);
        CHECK(std::abs(a.z) < 1e-10);
    }

    const double sep_start = h1.position(-0.75).x - h0.position(-0.75).x;
    const double sep_end = h1.position(0.75).x - h0.position(0.75).x;
    CHECK(sep_start == Catch::Approx(1.0).margin(1e-9));
    CHECK(sep_end > sep_start + 1e-3);
}

TEST_CASE("smeared force trace resolves the front step over the cloud width") {
    TwoBodyOptions opts;
    opts.force_trace = true;
    const TwoBodyData d = scenario_two_body(TwoBodyPreset::RetardedLine, opts);
    const std::vector<ForceTraceRow>& rows = d.force_trace;

    const double diameter = opts.smear_diameter;
    const double t_star = 1.0;
    REQUIRE(rows.size() >= 95u);
    REQUIRE(rows.size() <= 99u);
    CHECK(rows.front().t == Catch::Approx(t_star - 3.0 * diameter).margin(1e-12));
    CHECK(rows.back().t == Catch::Approx(t_star + 3.0 * diameter).margin(1e-3));
    CHECK(rows[1].t - rows[0].t == Catch::Approx(diameter / 16.0).margin(1e-12));

    const double v = 0.2 / std::sqrt(1.04);
    double lo = 1e30, hi = -1e30;
    for (const ForceTraceRow& row : rows) {
        REQUIRE(std::isfinite(row.force.x));
        CHECK(std::abs(row.force.y) < 1e-6);
        CHECK(std::abs(row.force.z) < 1e-6);
        lo = std::min(lo, row.force.x);
        hi = std::max(hi, row.force.x);
        if (row.t <= t_star - diameter) {
            // cloud fully outside the front: static Coulomb pull-back
            CHECK(row.force.x == Catch::Approx(1.0).margin(1e-4));
        }
        if (row.t >= t_star + diameter) {
            // fully inside: field of the uniformly moving source, head on
            const double expect = (1.0 - v * v) / ((1.0 - v * row.t) * (1.0 - v * row.t));
            CHECK(row.force.x == Catch::Approx(expect).margin(2e-3));
        }
    }
    CHECK(rows.back().force.x - rows.front().force.x > 0.3);
    CHECK(lo > 0.5);   // the resolved front never dips towards zero
    CHECK(hi < 5.0);   // ... and never blows up
}

TEST_CASE("scenario registry and directory outputs") {
    const std::vector<std::string> names = scenario_names();
    REQUIRE(names == std::vector<std::string>{"coulomb-front", "paper-example",
                                              "retarded-line", "fst-window"});

    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "lwlab_scenario_test";
    fs::remove_all(root);

    const std::vector<std::vector<std::string>> expected_files = {
        {"field_grid.csv", "manifest.json", "shells.csv"},
        {"manifest.json", "report.json"},
        {"events.json", "force_trace.csv", "manifest.json", "trajectory_0.csv",
         "trajectory_1.csv"},
        {"events.json", "manifest.json", "trajectory_0.csv", "trajectory_1.csv"},
    };

    for (std::size_t i = 0; i < names.size(); ++i) {
        const fs::path a = root / (names[i] + "_a");
        const fs::path b = root / (names[i] + "_b");
        run_scenario_to_directory(names[i], a.string());
        run_scenario_to_directory(names[i], b.string());

        INFO("scenario " << names[i]);
        REQUIRE(dir_files(a) == expected_files[i]);
        REQUIRE(dir_files(b) == expected_files[i]);
        for (const std::string& f : expected_files[i])
            CHECK(slurp(a / f) == slurp(b / f));  // reruns are byte-identical

        const Json manifest = Json::parse(slurp(a / "manifest.json"));
        CHECK(manifest.at("version").is_string());
        CHECK(manifest.at("config_sha").is_string());
        CHECK(manifest.contains("tolerances"));
    }

    const Json report = Json::parse(slurp(root / "paper-example_a" / "report.json"));
    REQUIRE(report.size() == 8u);
    const PaperExampleReport r = scenario_paper_example();
    CHECK(report.at("E1x_si").get<double>() == r.E1x_si);
    CHECK(report.at("P2_si").get<double>() == r.P2_si);
    CHECK(report.at("rise_time_si").get<double>() == 1e-6);

    const Json line_events = Json::parse(slurp(root / "retarded-line_a" / "events.json"));
    REQUIRE(line_events.at("front_crossings").size() == 1u);
    CHECK(line_events.at("front_crossings").at(0).at("charge").get<int>() == 1);
    CHECK(line_events.at("halt").at("reason").get<std::string>() == "singular-front");
    CHECK(line_events.at("relaxation").is_null());

    const Json win_events = Json::parse(slurp(root / "fst-window_a" / "events.json"));
    CHECK(win_events.at("halt").is_null());
    CHECK(win_events.at("relaxation").at("converged").get<bool>() == true);
    CHECK(win_events.at("front_crossings").empty());

    // SI output converts the trajectory columns on write
    const fs::path si_dir = root / "fst-window_si";
    run_scenario_to_directory("fst-window", si_dir.string(), /*si_units=*/true);
    std::ifstream is(si_dir / "trajectory_0.csv");
    std::string header, first;
    REQUIRE(std::getline(is, header));
    REQUIRE(std::getline(is, first));
    const double t_si = std::strtod(first.c_str(), nullptr);
    CHECK(t_si == Catch::Approx(-0.75 / si::speed_of_light).epsilon(1e-12));

    CHECK_THROWS_AS(run_scenario_to_directory("no-such-scenario", (root / "x").string()),
                    ConfigError);
    fs::remove_all(root);
}
