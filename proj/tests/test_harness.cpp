#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <sstream>

#include "ccik/harness.hpp"
#include "oracles.hpp"

using namespace ccik;
using namespace ccik::testing;

TEST_CASE("reachable corpus is deterministic and valid") {
    StructuralParams P;
    const auto a = generate_reachable_corpus(P, ConfigClass::CI1, 200, 77);
    const auto b = generate_reachable_corpus(P, ConfigClass::CI1, 200, 77);
    REQUIRE(a.size() == 200);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].target.p == b[i].target.p);  // bit-identical
        CHECK(a[i].target.R == b[i].target.R);
        REQUIRE(a[i].generating_config.has_value());
        const auto& c = std::get<ConfigCI1>(*a[i].generating_config);
        CHECK(c.within_limits(P));
        // target really is the forward map of the stored config
        const Pose fk = forward_kinematics(P, c);
        CHECK((fk.p - a[i].target.p).norm() == 0.0);
    }
    const auto c = generate_reachable_corpus(P, ConfigClass::CI1, 200, 78);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].target.p != c[i].target.p) any_diff = true;
    }
    CHECK(any_diff);

    CHECK(generate_reachable_corpus(P, ConfigClass::CI2, 0, 1).empty());
}

TEST_CASE("reachable corpus solves at 100 percent") {
    StructuralParams P;
    for (const ConfigClass cls : {ConfigClass::CI1, ConfigClass::CI2}) {
        const auto corpus = generate_reachable_corpus(P, cls, 300, 5);
        for (const auto& tc : corpus) {
            const IKOutcome o = solve(tc.target, P, cls);
            REQUIRE_MESSAGE(o.solved(), "case ", tc.id);
        }
    }
}

TEST_CASE("random-orientation corpus: positions feasible, orientations mixed") {
    StructuralParams P;
    const auto corpus = generate_random_orientation_corpus(P, ConfigClass::CI1, 60, 9);
    REQUIRE(corpus.size() == 60);
    int feasible = 0;
    for (const auto& tc : corpus) {
        CHECK(position_in_translational_workspace(tc.target.p, P, ConfigClass::CI1));
        CHECK_FALSE(tc.generating_config.has_value());
        if (classify_direction(tc.target, P, ConfigClass::CI1) == DirectionClass::Feasible) {
            ++feasible;
        }
    }
    // reachability rate strictly between 0 and 1
    CHECK(feasible > 0);
    CHECK(feasible < 60);

    const auto again = generate_random_orientation_corpus(P, ConfigClass::CI1, 60, 9);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(corpus[i].target.p == again[i].target.p);
        CHECK(corpus[i].target.R == again[i].target.R);
    }
}

TEST_CASE("benchmark report arithmetic recomputes from the log") {
    StructuralParams P;
    const auto corpus = generate_reachable_corpus(P, ConfigClass::CI2, 150, 3);
    BenchSolvers solvers;
    const BenchReport rep = run_benchmark(corpus, solvers, P);
    REQUIRE(rep.stats.count("vsik") == 1);
    REQUIRE(rep.stats.count("dls") == 1);
    for (const auto& [name, st] : rep.stats) {
        const SolverStats re = stats_from_records(rep.log, name, rep.mode, 0.01, 0.01);
        CHECK(re.failure_count == st.failure_count);
        CHECK(re.success_rate == st.success_rate);
        CHECK(re.avg_iterations == st.avg_iterations);
        CHECK(re.avg_position_error_mm == st.avg_position_error_mm);
        CHECK(re.avg_orientation_error_rad == st.avg_orientation_error_rad);
        CHECK(re.total_time_s == st.total_time_s);
    }
    CHECK(rep.stats.at("vsik").success_rate == 1.0);
    CHECK(rep.log.size() == 2 * corpus.size());

    CHECK_THROWS_AS(run_benchmark({}, solvers, P), std::invalid_argument);
}

TEST_CASE("corpus json round-trip") {
    StructuralParams P;
    const auto corpus = generate_reachable_corpus(P, ConfigClass::CI1, 25, 4);
    write_corpus_json(corpus, "corpus_test.json");
    const auto back = read_corpus_json("corpus_test.json");
    REQUIRE(back.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(back[i].id == corpus[i].id);
        CHECK(back[i].config_class == corpus[i].config_class);
        CHECK(back[i].provenance == corpus[i].provenance);
        CHECK(back[i].target.p == corpus[i].target.p);
        CHECK(back[i].target.R == corpus[i].target.R);
        REQUIRE(back[i].generating_config.has_value());
        const auto& ca = std::get<ConfigCI1>(*back[i].generating_config);
        const auto& cb = std::get<ConfigCI1>(*corpus[i].generating_config);
        CHECK(ca.phi == cb.phi);
        CHECK(ca.L1 == cb.L1);
    }
}

TEST_CASE("report json, text table and case log") {
    StructuralParams P;
    const auto corpus = generate_reachable_corpus(P, ConfigClass::CI1, 40, 6);
    BenchSolvers solvers;
    solvers.dls = false;
    const BenchReport rep = run_benchmark(corpus, solvers, P);
    CHECK_NOTHROW(write_report_json(rep, "report_test.json"));
    CHECK_NOTHROW(write_case_log_csv(rep, "log_test.csv"));
    std::ostringstream table;
    write_report_text(rep, table);
    CHECK(table.str().find("success_rate") != std::string::npos);
    CHECK(table.str().find("vsik") != std::string::npos);

    // csv has one line per record plus header
    std::ifstream in("log_test.csv");
    int lines = 0;
    std::string line;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 1 + int(rep.log.size()));
}

TEST_CASE("workspace export round-trip through the harness") {
    StructuralParams P;
    WorkspaceOptions opt;
    opt.n_sweep = 60;
    opt.grid_n = 50;
    opt.raster_n = 96;
    export_workspace(Vec3(75, -20, 95), P, ConfigClass::CI2, "ws_export_test", opt);
    const BoundarySet back = read_boundary_json("ws_export_test.json");
    const BoundarySet direct = build_boundary_set(Vec3(75, -20, 95), P, ConfigClass::CI2, opt);
    CHECK(same_boundary_data(back, direct));
    CHECK_FALSE(read_boundary_csv("ws_export_test.csv").empty());

    // on-axis positions export circles
    export_workspace(Vec3(0, 0, 170), P, ConfigClass::CI2, "ws_axis_test", opt);
    const BoundarySet axis = read_boundary_json("ws_axis_test.json");
    CHECK(axis.on_axis);
    CHECK_FALSE(axis.asz_intervals.empty());
}

TEST_CASE("pose json validation") {
    {
        std::ofstream out("pose_ok.json");
        out << R"({"p":[1,2,3],"R":[[1,0,0],[0,1,0],[0,0,1]]})";
    }
    const Pose p = read_pose_json("pose_ok.json");
    CHECK(p.p == Vec3(1, 2, 3));
    {
        std::ofstream out("pose_bad.json");
        out << R"({"p":[1,2,3],"R":[[1,0.5,0],[0,1,0],[0,0,1]]})";
    }
    CHECK_THROWS(read_pose_json("pose_bad.json"));
}
