#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lwlab/lwlab.hpp"

using namespace lwlab;
namespace fs = std::filesystem;

namespace {

fs::path work_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "lwlab_cli_test" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    REQUIRE(os.good());
    os << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(LWLAB_CLI_PATH) + " " + args;
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

Json minimal_config() {
    return Json{{"horizon", 0.5},
                {"charges", Json::array({Json{{"m", 1.0},
                                              {"e", 0.0},
                                              {"q0", {0.0, 0.0, 0.0}},
                                              {"p0", {0.3, 0.0, 0.0}}}})}};
}

}  // namespace

TEST_CASE("parse_config fills defaults and picks the solver mode") {
    const RunSetup s = parse_config(minimal_config());
    CHECK(s.horizon == 0.5);
    CHECK(s.system.lambda == 1.0);
    CHECK_FALSE(s.use_relaxation);
    CHECK(s.t_start == 0.0);
    REQUIRE(s.stripes.size() == 1u);
    REQUIRE(s.inits.size() == 1u);
    CHECK_FALSE(s.system.coupling.has_self_coupling());
    CHECK(s.inits[0].aux == s.stripes[0]);  // default auxiliary is the stripe
    CHECK(s.inits[0].lambda == 1.0);

    Json half = minimal_config();
    half["lambda"] = 0.5;
    const RunSetup w = parse_config(half);
    CHECK(w.use_relaxation);
    CHECK(w.t_start == -0.5);
    CHECK(w.stripes[0]->t_max() == Catch::Approx(-0.5).margin(1e-12));

    Json coupled = minimal_config();
    coupled["charges"].push_back(Json{{"m", 1.0}, {"e", 0.1}, {"q0", {1.0, 0.0, 0.0}}});
    coupled["coupling"] = Json::array({{0.0, 1.0}, {1.0, 0.0}});
    CHECK_FALSE(parse_config(coupled).use_relaxation);
    coupled["coupling"] = Json::array({{0.25, 1.0}, {1.0, 0.0}});
    coupled["rho"] = Json{{"radius", 0.05}};
    CHECK(parse_config(coupled).use_relaxation);
}

TEST_CASE("parse_config reports the offending key path") {
    auto key_of = [](const Json& doc) {
        try {
            parse_config(doc);
        } catch (const ConfigError& e) {
            return e.key;
        }
        return std::string("no-error");
    };

    Json no_horizon = minimal_config();
    no_horizon.erase("horizon");
    CHECK(key_of(no_horizon) == "horizon");

    Json no_e = minimal_config();
    no_e["charges"][0].erase("e");
    CHECK(key_of(no_e) == "charges[0].e");

    Json bad_aux = minimal_config();
    bad_aux["charges"][0]["initial_field"] = Json{{"aux", Json{{"kind", "csv"}}}};
    CHECK(key_of(bad_aux) == "charges[0].initial_field.aux.path");

    Json bad_lambda = minimal_config();
    bad_lambda["lambda"] = 1.5;
    CHECK(key_of(bad_lambda) == "lambda");

    Json bad_grid = minimal_config();
    bad_grid["grid"] = Json{{"times", {0.1}}};
    CHECK(key_of(bad_grid) == "grid");
}

TEST_CASE("parse_config converts SI documents to natural units") {
    const Json doc{{"units", "si"},
                   {"horizon", 1e-8},
                   {"integrator", Json{{"step", 1e-10}, {"min_separation", 0.5}}},
                   {"charges", Json::array({Json{{"m", si::electron_mass},
                                                 {"e", si::elementary_charge},
                                                 {"q0", {2.0, 0.0, 0.0}}}})}};
    const RunSetup s = parse_config(doc);
    CHECK(s.si_units);
    CHECK(s.horizon == Catch::Approx(1e-8 * si::speed_of_light).epsilon(1e-12));
    CHECK(s.system.integrator.step ==
          Catch::Approx(1e-10 * si::speed_of_light).epsilon(1e-12));
    CHECK(s.system.masses[0] == Catch::Approx(1.0).epsilon(1e-12));
    // one elementary charge squared is the classical electron radius in these units
    CHECK(s.system.charges[0] * s.system.charges[0] ==
          Catch::Approx(2.817940326204928e-15).epsilon(1e-10));
    CHECK(s.stripes[0]->position(0.0).x == Catch::Approx(2.0).epsilon(1e-14));

    Json with_free = doc;
    with_free["charges"][0]["initial_field"] =
        Json{{"free", Json{{"kind", "plane_wave"},
                           {"k", {0.0, 0.0, 1.0}},
                           {"polarization", {1.0, 0.0, 0.0}},
                           {"amplitude", 0.1}}}};
    CHECK_THROWS_AS(parse_config(with_free), ConfigError);
}

TEST_CASE("grid specs parse as point lists and boxes") {
    Json doc = minimal_config();
    doc["grid"] = Json{{"times", {0.1, 0.2}},
                       {"points", Json::array({{1.0, 0.0, 0.0}, {0.0, 2.0, 0.0}})}};
    const RunSetup a = parse_config(doc);
    REQUIRE(a.grid.has_value());
    CHECK(a.grid->times.size() == 2u);
    CHECK(a.grid->points.size() == 2u);
    CHECK(a.grid->size() == 4u);

    doc["grid"] = Json{{"times", {0.3}},
                       {"box", Json{{"lo", {1.0, 0.0, 0.0}},
                                    {"hi", {1.0, 0.5, 0.0}},
                                    {"n", {1, 2, 1}}}}};
    const RunSetup b = parse_config(doc);
    REQUIRE(b.grid.has_value());
    REQUIRE(b.grid->points.size() == 2u);
    CHECK(norm(b.grid->points[0] - Vec3{1.0, 0.0, 0.0}) < 1e-15);
    CHECK(norm(b.grid->points[1] - Vec3{1.0, 0.5, 0.0}) < 1e-15);
}

TEST_CASE("config hashing is stable and content-sensitive") {
    const Json doc = minimal_config();
    const std::string h = config_hash(doc);
    CHECK(h.size() == 16u);
    CHECK(h == config_hash(Json::parse(doc.dump())));
    Json other = doc;
    other["horizon"] = 0.75;
    CHECK(h != config_hash(other));
}

TEST_CASE("load_config_file rejects unreadable and malformed input") {
    CHECK_THROWS_AS(load_config_file("/no/such/file.json"), ConfigError);
    const fs::path d = work_dir("badjson");
    write_file(d / "bad.json", "{ this is not json");
    try {
        load_config_file((d / "bad.json").string());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("invalid JSON") != std::string::npos);
    }
}

TEST_CASE("cli simulate integrates a free charge and is deterministic") {
    const fs::path d = work_dir("simulate");
    write_file(d / "cfg.json", minimal_config().dump(2));

    const std::string out_a = (d / "out_a").string();
    const std::string out_b = (d / "out_b").string();
    REQUIRE(run_cli("simulate --config " + (d / "cfg.json").string() + " --out " + out_a) == 0);
    REQUIRE(run_cli("simulate --config " + (d / "cfg.json").string() + " --out " + out_b) == 0);

    for (const char* f : {"trajectory_0.csv", "events.json", "manifest.json"}) {
        CHECK(fs::exists(fs::path(out_a) / f));
        CHECK(slurp(fs::path(out_a) / f) == slurp(fs::path(out_b) / f));
    }

    std::ifstream is(fs::path(out_a) / "trajectory_0.csv");
    const TrajectoryHistory tr = read_trajectory_csv(is, 1.0);
    const double v = 0.3 / std::sqrt(1.09);
    CHECK(tr.t_max() == Catch::Approx(0.5).margin(1e-9));
    CHECK(norm(tr.position(0.5) - Vec3{0.5 * v, 0.0, 0.0}) < 1e-10);
    CHECK(norm(tr.momentum(0.5) - Vec3{0.3, 0.0, 0.0}) < 1e-12);

    const Json events = Json::parse(slurp(fs::path(out_a) / "events.json"));
    CHECK(events.at("halt").is_null());
    CHECK(events.at("front_crossings").empty());
}

TEST_CASE("cli reports configuration errors on stderr with exit code 1") {
    const fs::path d = work_dir("config_error");
    Json bad = minimal_config();
    bad["charges"][0]["initial_field"] = Json{{"aux", Json{{"kind", "csv"}}}};
    write_file(d / "cfg.json", bad.dump(2));

    const int code = run_cli("check --config " + (d / "cfg.json").string() + " 2> " +
                             (d / "err.txt").string());
    CHECK(code == 1);
    CHECK(slurp(d / "err.txt").find("charges[0].initial_field.aux.path") !=
          std::string::npos);
}

TEST_CASE("cli evaluate-field reports an exact front hit as a structured error") {
    const fs::path d = work_dir("front_hit");
    const Json doc{{"horizon", 1.0},
                   {"charges",
                    Json::array({Json{{"m", 1.0},
                                      {"e", 0.05},
                                      {"q0", {0.0, 0.0, 0.0}},
                                      {"p0", {0.5, 0.0, 0.0}},
                                      {"initial_field",
                                       Json{{"aux", Json{{"kind", "rest"}}}}}}})},
                   {"grid", Json{{"times", {0.5}},
                                 {"points", Json::array({{0.5, 0.0, 0.0}})}}}};
    write_file(d / "cfg.json", doc.dump(2));

    const int code = run_cli("evaluate-field --config " + (d / "cfg.json").string() +
                             " --out " + (d / "rows.csv").string() + " > " +
                             (d / "stdout.json").string());
    CHECK(code == 2);
    const Json err = Json::parse(slurp(d / "stdout.json"));
    CHECK(err.at("error").get<std::string>() == "singular-front");
    CHECK(err.at("t").get<double>() == 0.5);
    REQUIRE(err.at("shells").size() == 2u);
    CHECK(err.at("shells").at(0).at("radius").get<double>() ==
          Catch::Approx(0.5).margin(1e-12));
    const Json& center = err.at("shells").at(0).at("center");
    CHECK(center.at(0).get<double>() == 0.0);
}

TEST_CASE("cli check distinguishes compatible and incompatible data") {
    const fs::path d = work_dir("check");
    write_file(d / "good.json", minimal_config().dump(2));
    REQUIRE(run_cli("check --config " + (d / "good.json").string() + " --out " +
                    (d / "good_report.json").string()) == 0);
    const Json good = Json::parse(slurp(d / "good_report.json"));
    CHECK(good.at("compatible").get<bool>());
    CHECK(good.at("charges").at(0).at("c1").at("pass").get<bool>());

    Json bad = minimal_config();
    bad["charges"][0]["initial_field"] = Json{{"aux", Json{{"kind", "rest"}}}};
    write_file(d / "bad.json", bad.dump(2));
    REQUIRE(run_cli("check --config " + (d / "bad.json").string() + " --out " +
                    (d / "bad_report.json").string()) == 3);
    const Json rep = Json::parse(slurp(d / "bad_report.json"));
    CHECK_FALSE(rep.at("compatible").get<bool>());
    CHECK_FALSE(rep.at("charges").at(0).at("c1").at("pass").get<bool>());
    // initial momentum is 0.3 x, the resting auxiliary lags by exactly that
    CHECK(rep.at("charges").at(0).at("c1").at("momentum_gap").at(0).get<double>() ==
          Catch::Approx(-0.3).margin(1e-12));
    CHECK(rep.at("charges").at(0).at("net_shell_max").get<double>() > 1e-6);
}

TEST_CASE("cli field output formats carry identical numbers") {
    const fs::path d = work_dir("formats");
    Json doc = minimal_config();
    doc["charges"][0]["e"] = 1.0;
    doc["grid"] = Json{{"times", {0.3}},
                       {"points", Json::array({{1.0, 0.0, 0.0}, {0.0, 1.5, 0.5}})}};
    write_file(d / "cfg.json", doc.dump(2));

    REQUIRE(run_cli("evaluate-field --config " + (d / "cfg.json").string() +
                    " --out " + (d / "rows.csv").string() + " --format csv") == 0);
    REQUIRE(run_cli("evaluate-field --config " + (d / "cfg.json").string() +
                    " --out " + (d / "rows.jsonl").string() + " --format json") == 0);

    std::ifstream csv(d / "rows.csv");
    std::string header, line;
    REQUIRE(std::getline(csv, header));
    CHECK(header == "t,x,y,z,Ex,Ey,Ez,Bx,By,Bz,region,shell_count");

    std::ifstream jsonl(d / "rows.jsonl");
    std::string jline;
    int rows = 0;
    while (std::getline(csv, line) && std::getline(jsonl, jline)) {
        ++rows;
        const Json j = Json::parse(jline);
        std::vector<double> cols;
        std::stringstream ss(line);
        std::string cell;
        for (int k = 0; k < 10 && std::getline(ss, cell, ','); ++k)
            cols.push_back(std::strtod(cell.c_str(), nullptr));
        REQUIRE(cols.size() == 10u);
        CHECK(cols[0] == j.at("t").get<double>());
        CHECK(cols[4] == j.at("Ex").get<double>());
        CHECK(cols[5] == j.at("Ey").get<double>());
        CHECK(cols[6] == j.at("Ez").get<double>());
        CHECK(cols[7] == j.at("Bx").get<double>());
        CHECK(cols[9] == j.at("Bz").get<double>());
        CHECK(std::getline(ss, cell, ','));  // region label column present
        CHECK(j.at("region").is_string());
    }
    CHECK(rows == 2);
}

TEST_CASE("cli scenario run matches simulate on the dumped preset config") {
    const fs::path d = work_dir("scenario_vs_simulate");
    write_file(d / "line.json", retarded_line_config().dump(2));

    const std::string scen_dir = (d / "scenario").string();
    const std::string sim_dir = (d / "simulate").string();
    REQUIRE(run_cli("scenario retarded-line --out " + scen_dir) == 0);
    // simulate reports the singular-front halt through its exit code
    REQUIRE(run_cli("simulate --config " + (d / "line.json").string() + " --out " +
                    sim_dir) == 2);

    for (const char* f :
         {"trajectory_0.csv", "trajectory_1.csv", "events.json", "manifest.json"})
        CHECK(slurp(fs::path(scen_dir) / f) == slurp(fs::path(sim_dir) / f));
    CHECK(fs::exists(fs::path(scen_dir) / "force_trace.csv"));
    CHECK_FALSE(fs::exists(fs::path(sim_dir) / "force_trace.csv"));
}

TEST_CASE("cli propagate-free writes the analytic wave on the grid") {
    const fs::path d = work_dir("propagate_free");
    Json points = Json::array();
    points.push_back({0.1, 0.2, 0.3});
    points.push_back({-1.0, 0.5, 2.0});
    const Json doc{{"free", Json{{"kind", "plane_wave"},
                                 {"k", {0.0, 0.0, 2.0}},
                                 {"polarization", {1.0, 0.0, 0.0}},
                                 {"amplitude", 0.25}}},
                   {"grid", Json{{"times", {0.0, 0.7}}, {"points", points}}}};
    write_file(d / "cfg.json", doc.dump(2));
    REQUIRE(run_cli("propagate-free --config " + (d / "cfg.json").string() +
                    " --out " + (d / "wave.csv").string()) == 0);

    const FreeFieldSpec spec = FreeFieldSpec::plane_wave(
        Vec3{0.0, 0.0, 2.0}, Vec3{1.0, 0.0, 0.0}, 0.25, 0.0);
    std::ifstream is(d / "wave.csv");
    std::string header, line;
    REQUIRE(std::getline(is, header));
    int rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        std::vector<double> cols;
        std::stringstream ss(line);
        std::string cell;
        for (int k = 0; k < 10 && std::getline(ss, cell, ','); ++k)
            cols.push_back(std::strtod(cell.c_str(), nullptr));
        REQUIRE(cols.size() == 10u);
        const EMFieldValue f =
            propagate_free_field(spec, Vec3{cols[1], cols[2], cols[3]}, cols[0]);
        // %.17g output round-trips doubles exactly
        CHECK(cols[4] == f.E.x);
        CHECK(cols[8] == f.B.y);
    }
    CHECK(rows == 4);

    Json si_doc = doc;
    si_doc["units"] = "si";
    write_file(d / "si.json", si_doc.dump(2));
    CHECK(run_cli("propagate-free --config " + (d / "si.json").string() + " --out " +
                  (d / "nope.csv").string() + " 2> /dev/null") == 1);
}

TEST_CASE("cli rejects unknown scenarios and missing subcommands") {
    const fs::path d = work_dir("usage");
    CHECK(run_cli("scenario bogus --out " + (d / "x").string() + " 2> " +
                  (d / "err.txt").string()) == 1);
    CHECK(slurp(d / "err.txt").find("unknown scenario") != std::string::npos);
    CHECK(run_cli("2> /dev/null") != 0);
}
