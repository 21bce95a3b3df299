#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccik/harness.hpp"

namespace {

ccik::ConfigClass parse_class(const std::string& s) {
    if (s == "ci1") return ccik::ConfigClass::CI1;
    if (s == "ci2") return ccik::ConfigClass::CI2;
    throw CLI::ValidationError("--class", "expected ci1 or ci2");
}

ccik::Vec3 parse_position(const std::string& s) {
    double x, y, z;
    if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &x, &y, &z) != 3) {
        throw CLI::ValidationError("--position", "expected x,y,z");
    }
    return {x, y, z};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2-segment continuum robot IK solvers and workspace tools"};
    app.require_subcommand(1);

    std::string params_path;
    app.add_option("--params", params_path, "structural parameters file (key value lines)");

    auto* gen = app.add_subcommand("gen", "generate a target corpus");
    std::string gen_class = "ci1", gen_mode = "reachable", gen_out;
    int gen_n = 1000;
    std::uint64_t gen_seed = 1;
    gen->add_option("--class", gen_class, "ci1 or ci2")->required();
    gen->add_option("--n", gen_n, "number of cases");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--mode", gen_mode, "reachable or random-orientation");
    gen->add_option("--out", gen_out, "output corpus JSON")->required();

    auto* solve_cmd = app.add_subcommand("solve", "solve a single target pose");
    std::string solve_target, solve_class = "ci1", solve_solver = "vsik";
    solve_cmd->add_option("--target", solve_target, "target pose JSON file")->required();
    solve_cmd->add_option("--class", solve_class, "ci1 or ci2")->required();
    solve_cmd->add_option("--solver", solve_solver, "vsik or dls");

    auto* bench = app.add_subcommand("bench", "run a benchmark over a corpus");
    std::string bench_corpus, bench_solvers = "vsik,dls", bench_report, bench_log;
    bench->add_option("--corpus", bench_corpus, "corpus JSON")->required();
    bench->add_option("--solvers", bench_solvers, "comma list: vsik,dls");
    bench->add_option("--out-report", bench_report, "report JSON path");
    bench->add_option("--out-log", bench_log, "per-case CSV path");

    auto* ws = app.add_subcommand("workspace", "export dexterous-workspace boundaries");
    std::string ws_position, ws_class = "ci1", ws_out;
    ws->add_option("--position", ws_position, "target position x,y,z")->required();
    ws->add_option("--class", ws_class, "ci1 or ci2")->required();
    ws->add_option("--out", ws_out, "output path prefix (.csv and .json)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        ccik::StructuralParams params;
        if (!params_path.empty()) params = ccik::StructuralParams::load(params_path);
        params.validate();

        if (*gen) {
            const auto cls = parse_class(gen_class);
            std::vector<ccik::TestCase> corpus;
            if (gen_mode == "reachable") {
                corpus = ccik::generate_reachable_corpus(params, cls, gen_n, gen_seed);
            } else if (gen_mode == "random-orientation") {
                corpus = ccik::generate_random_orientation_corpus(params, cls, gen_n, gen_seed);
            } else {
                std::cerr << "unknown --mode: " << gen_mode << "\n";
                return 2;
            }
            ccik::write_corpus_json(corpus, gen_out);
            std::cout << "wrote " << corpus.size() << " cases to " << gen_out << "\n";
        } else if (*solve_cmd) {
            const auto cls = parse_class(solve_class);
            const ccik::Pose target = ccik::read_pose_json(solve_target);
            ccik::IKOutcome o;
            if (solve_solver == "vsik") {
                o = ccik::solve(target, params, cls);
            } else if (solve_solver == "dls") {
                o = ccik::solve_dls(target, params, cls);
            } else {
                std::cerr << "unknown --solver: " << solve_solver << "\n";
                return 2;
            }
            nlohmann::json j;
            j["status"] = ccik::to_string(o.status);
            j["iterations"] = o.iterations;
            j["pos_err_mm"] = o.pos_err;
            j["ori_err_rad"] = o.ori_err;
            if (o.config) {
                nlohmann::json jc;
                if (const auto* c1 = std::get_if<ccik::ConfigCI1>(&*o.config)) {
                    jc = {{"class", "ci1"},     {"phi", c1->phi},       {"theta1", c1->theta1},
                          {"L1", c1->L1},       {"delta1", c1->delta1}, {"theta2", c1->theta2},
                          {"delta2", c1->delta2}};
                } else {
                    const auto& c2 = std::get<ccik::ConfigCI2>(*o.config);
                    jc = {{"class", "ci2"},     {"Ls", c2.Ls},          {"phi", c2.phi},
                          {"theta1", c2.theta1}, {"delta1", c2.delta1}, {"theta2", c2.theta2},
                          {"delta2", c2.delta2}};
                }
                j["config"] = std::move(jc);
            }
            std::cout << j.dump(2) << "\n";
        } else if (*bench) {
            const auto corpus = ccik::read_corpus_json(bench_corpus);
            ccik::BenchSolvers solvers;
            solvers.vsik = bench_solvers.find("vsik") != std::string::npos;
            solvers.dls = bench_solvers.find("dls") != std::string::npos;
            const auto report = ccik::run_benchmark(corpus, solvers, params);
            ccik::write_report_text(report, std::cout);
            if (!bench_report.empty()) ccik::write_report_json(report, bench_report);
            if (!bench_log.empty()) ccik::write_case_log_csv(report, bench_log);
        } else if (*ws) {
            const auto cls = parse_class(ws_class);
            ccik::export_workspace(parse_position(ws_position), params, cls, ws_out);
            std::cout << "wrote " << ws_out << ".csv and " << ws_out << ".json\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
