#include "ccik/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace ccik {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

Mat3 euler_zyx(double yaw, double pitch, double roll) {
    return rot_z(yaw) * rot_y(pitch) * rot_axis(Vec3(1, 0, 0), roll);
}

// cheap outer hull of the translational workspace for rejection sampling
bool inside_reach_hull(const Vec3& p, const StructuralParams& P, ConfigClass cls) {
    const double reach = P.L10 + P.Lr + P.L20 + P.Lg;
    if (cls == ConfigClass::CI1) return p.norm() <= reach + 1e-9;
    const double t = std::clamp(p.z(), 0.0, P.Ls_max);
    return (p - Vec3(0, 0, t)).norm() <= reach + 1e-9;
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

nlohmann::json config_to_json(const Config& c) {
    nlohmann::json j;
    if (const auto* c1 = std::get_if<ConfigCI1>(&c)) {
        j["class"] = "ci1";
        j["phi"] = c1->phi;
        j["theta1"] = c1->theta1;
        j["L1"] = c1->L1;
        j["delta1"] = c1->delta1;
        j["theta2"] = c1->theta2;
        j["delta2"] = c1->delta2;
    } else {
        const auto& c2 = std::get<ConfigCI2>(c);
        j["class"] = "ci2";
        j["Ls"] = c2.Ls;
        j["phi"] = c2.phi;
        j["theta1"] = c2.theta1;
        j["delta1"] = c2.delta1;
        j["theta2"] = c2.theta2;
        j["delta2"] = c2.delta2;
    }
    return j;
}

Config config_from_json(const nlohmann::json& j) {
    if (j.at("class") == "ci1") {
        ConfigCI1 c;
        c.phi = j.at("phi");
        c.theta1 = j.at("theta1");
        c.L1 = j.at("L1");
        c.delta1 = j.at("delta1");
        c.theta2 = j.at("theta2");
        c.delta2 = j.at("delta2");
        return c;
    }
    ConfigCI2 c;
    c.Ls = j.at("Ls");
    c.phi = j.at("phi");
    c.theta1 = j.at("theta1");
    c.delta1 = j.at("delta1");
    c.theta2 = j.at("theta2");
    c.delta2 = j.at("delta2");
    return c;
}

nlohmann::json pose_to_json(const Pose& p) {
    nlohmann::json j;
    j["p"] = {p.p.x(), p.p.y(), p.p.z()};
    j["R"] = {{p.R(0, 0), p.R(0, 1), p.R(0, 2)},
              {p.R(1, 0), p.R(1, 1), p.R(1, 2)},
              {p.R(2, 0), p.R(2, 1), p.R(2, 2)}};
    return j;
}

Pose pose_from_json(const nlohmann::json& j) {
    Pose p;
    const auto& jp = j.at("p");
    p.p = Vec3(jp[0], jp[1], jp[2]);
    const auto& jr = j.at("R");
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) p.R(r, c) = jr[r][c];
    }
    return p;
}

}  // namespace

const char* to_string(Provenance p) {
    return p == Provenance::fk_generated ? "fk_generated" : "random_orientation";
}

const char* to_string(ConfigClass c) { return c == ConfigClass::CI1 ? "ci1" : "ci2"; }

Mat3 frame_from_direction(const Vec3& a) {
    const Vec3 ref = std::abs(a.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
    const Vec3 n = ref.cross(a).normalized();
    Mat3 R;
    R.col(0) = n;
    R.col(1) = a.cross(n);
    R.col(2) = a;
    return R;
}

std::vector<TestCase> generate_reachable_corpus(const StructuralParams& params, ConfigClass cls,
                                                int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<TestCase> out;
    out.reserve(std::max(n, 0));
    for (int i = 0; i < n; ++i) {
        TestCase tc;
        tc.id = i;
        tc.config_class = cls;
        tc.provenance = Provenance::fk_generated;
        tc.seed = seed;
        if (cls == ConfigClass::CI1) {
            ConfigCI1 c;
            // joint rejection keeps (theta1, L1) uniform over the valid wedge
            do {
                c.theta1 = uniform(rng, 0.0, params.theta1_max);
                c.L1 = uniform(rng, 0.0, params.L10);
            } while (c.L1 < params.r1_min * c.theta1);
            c.phi = uniform(rng, -M_PI, M_PI);
            c.delta1 = uniform(rng, -M_PI, M_PI);
            c.theta2 = uniform(rng, 0.0, params.theta2_max);
            c.delta2 = uniform(rng, -M_PI, M_PI);
            tc.generating_config = c;
        } else {
            ConfigCI2 c;
            c.Ls = uniform(rng, 0.0, params.Ls_max);
            c.phi = uniform(rng, -M_PI, M_PI);
            c.theta1 = uniform(rng, 0.0, params.theta1_max);
            c.delta1 = uniform(rng, -M_PI, M_PI);
            c.theta2 = uniform(rng, 0.0, params.theta2_max);
            c.delta2 = uniform(rng, -M_PI, M_PI);
            tc.generating_config = c;
        }
        tc.target = forward_kinematics(params, *tc.generating_config);
        out.push_back(std::move(tc));
    }
    return out;
}

bool position_in_translational_workspace(const Vec3& position, const StructuralParams& params,
                                         ConfigClass cls, const SolverSettings& settings) {
    if (!inside_reach_hull(position, params, cls)) return false;
    SolverSettings quick = settings;
    quick.completeness_scan = false;  // any solved direction settles membership
    // most feasible positions accept on the radial direction immediately
    std::vector<Vec3> dirs;
    if (position.norm() > 1e-9) dirs.push_back(position.normalized());
    for (int el = -80; el <= 80; el += 10) {
        const double ce = std::cos(el * M_PI / 180.0), se = std::sin(el * M_PI / 180.0);
        for (int az = 0; az < 360; az += 10) {
            dirs.emplace_back(ce * std::cos(az * M_PI / 180.0),
                              ce * std::sin(az * M_PI / 180.0), se);
        }
    }
    dirs.emplace_back(0, 0, 1);
    dirs.emplace_back(0, 0, -1);
    for (const Vec3& a : dirs) {
        const Pose t{position, frame_from_direction(a)};
        if (solve(t, params, cls, quick).solved()) return true;
    }
    return false;
}

std::vector<TestCase> generate_random_orientation_corpus(const StructuralParams& params,
                                                         ConfigClass cls, int n,
                                                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<TestCase> out;
    out.reserve(std::max(n, 0));
    const double reach = params.L10 + params.Lr + params.L20 + params.Lg;
    const double zmax = (cls == ConfigClass::CI2 ? params.Ls_max : 0.0) + reach;
    for (int i = 0; i < n; ++i) {
        TestCase tc;
        tc.id = i;
        tc.config_class = cls;
        tc.provenance = Provenance::random_orientation;
        tc.seed = seed;
        Vec3 pos;
        for (;;) {
            const double r = reach * std::sqrt(uniform(rng, 0.0, 1.0));
            const double ang = uniform(rng, -M_PI, M_PI);
            pos = Vec3(r * std::cos(ang), r * std::sin(ang), uniform(rng, -reach, zmax));
            if (position_in_translational_workspace(pos, params, cls)) break;
        }
        const double yaw = uniform(rng, -M_PI, M_PI);
        const double pitch = uniform(rng, -0.5 * M_PI, 0.5 * M_PI);
        const double roll = uniform(rng, -M_PI, M_PI);
        tc.target = Pose{pos, euler_zyx(yaw, pitch, roll)};
        out.push_back(std::move(tc));
    }
    return out;
}

SolverStats stats_from_records(const std::vector<CaseRecord>& log, const std::string& solver,
                               Provenance mode, double pos_tol, double ori_tol) {
    SolverStats s;
    long n = 0, iters = 0;
    for (const auto& r : log) {
        if (r.solver != solver) continue;
        ++n;
        s.total_time_s += r.time_s;
        iters += r.iterations;
        s.avg_position_error_mm += r.pos_err_mm;
        s.avg_orientation_error_rad += r.ori_err_rad;
        const bool ok = mode == Provenance::fk_generated
                            ? (r.status == SolveStatus::Solved && r.pos_err_mm < pos_tol &&
                               r.ori_err_rad < ori_tol)
                            : (r.pos_err_mm < pos_tol);
        if (!ok) ++s.failure_count;
    }
    if (n == 0) return s;
    s.avg_iterations = static_cast<double>(iters) / n;
    s.avg_time_per_iteration_s = iters > 0 ? s.total_time_s / iters : 0.0;
    s.success_rate = 1.0 - static_cast<double>(s.failure_count) / n;
    s.avg_position_error_mm /= n;
    s.avg_orientation_error_rad /= n;
    return s;
}

BenchReport run_benchmark(const std::vector<TestCase>& corpus, const BenchSolvers& solvers,
                          const StructuralParams& params, const SolverSettings& vsik_settings,
                          const DlsSettings& dls_settings) {
    if (corpus.empty()) throw std::invalid_argument("run_benchmark: empty corpus");
    BenchReport report;
    report.config_class = corpus.front().config_class;
    report.mode = corpus.front().provenance;
    const bool random_mode = report.mode == Provenance::random_orientation;

    for (const TestCase& tc : corpus) {
        if (solvers.vsik) {
            CaseRecord r;
            r.id = tc.id;
            r.solver = "vsik";
            const double t0 = now_seconds();
            IKOutcome o = solve(tc.target, params, tc.config_class, vsik_settings);
            int iters = o.iterations;
            if (random_mode && !o.solved()) {
                // substitute the closest feasible direction and re-solve
                for (int attempt = 0; attempt < 3 && !o.solved(); ++attempt) {
                    const ClosestDirection cd = closest_feasible_direction(
                        tc.target, params, tc.config_class, 600, vsik_settings);
                    Vec3 a_new = cd.direction;
                    if (attempt > 0) {
                        // pull further toward an interior direction
                        const Vec3 at = tc.target.a();
                        a_new = (a_new + (0.01 * attempt) * (a_new - at)).normalized();
                    }
                    const Vec3 at = tc.target.a();
                    Vec3 axis = at.cross(a_new);
                    Mat3 Rsub;
                    if (axis.norm() < 1e-12) {
                        Rsub = tc.target.R;
                    } else {
                        const double ang =
                            std::acos(std::clamp(at.dot(a_new), -1.0, 1.0));
                        Rsub = rot_axis(axis.normalized(), ang) * tc.target.R;
                    }
                    IKOutcome o2 =
                        solve(Pose{tc.target.p, Rsub}, params, tc.config_class, vsik_settings);
                    iters += o2.iterations;
                    if (o2.solved()) {
                        const Pose fk = forward_kinematics(params, *o2.config);
                        o2.pos_err = (fk.p - tc.target.p).norm();
                        o2.ori_err = orientation_angle(fk.R, tc.target.R);
                        o = o2;
                    }
                }
            }
            r.time_s = now_seconds() - t0;
            r.status = o.status;
            r.iterations = iters;
            r.pos_err_mm = std::isfinite(o.pos_err) ? o.pos_err : 1e9;
            r.ori_err_rad = std::isfinite(o.ori_err) ? o.ori_err : M_PI;
            r.branch = o.branch_used == RootBranch::first_root ? 0 : 1;
            report.log.push_back(std::move(r));
        }
        if (solvers.dls) {
            CaseRecord r;
            r.id = tc.id;
            r.solver = "dls";
            const double t0 = now_seconds();
            const IKOutcome o =
                solve_dls(tc.target, params, tc.config_class, dls_settings,
                          random_mode ? DlsPriority::position_first : DlsPriority::full_pose);
            r.time_s = now_seconds() - t0;
            r.status = o.status;
            r.iterations = o.iterations;
            r.pos_err_mm = o.pos_err;
            r.ori_err_rad = o.ori_err;
            r.branch = 0;
            report.log.push_back(std::move(r));
        }
    }
    if (solvers.vsik) {
        report.stats["vsik"] = stats_from_records(report.log, "vsik", report.mode,
                                                  vsik_settings.pos_tol, vsik_settings.ori_tol);
    }
    if (solvers.dls) {
        report.stats["dls"] = stats_from_records(report.log, "dls", report.mode,
                                                 dls_settings.pos_tol, dls_settings.ori_tol);
    }
    return report;
}

void export_workspace(const Vec3& position, const StructuralParams& params, ConfigClass cls,
                      const std::string& path_prefix, const WorkspaceOptions& opt) {
    const BoundarySet set = build_boundary_set(position, params, cls, opt);
    write_boundary_csv(set, path_prefix + ".csv");
    write_boundary_json(set, path_prefix + ".json");
}

void write_corpus_json(const std::vector<TestCase>& corpus, const std::string& path) {
    nlohmann::json j;
    nlohmann::json cases = nlohmann::json::array();
    for (const auto& tc : corpus) {
        nlohmann::json c;
        c["id"] = tc.id;
        c["config_class"] = to_string(tc.config_class);
        c["provenance"] = to_string(tc.provenance);
        c["seed"] = tc.seed;
        c["target"] = pose_to_json(tc.target);
        if (tc.generating_config) c["config"] = config_to_json(*tc.generating_config);
        cases.push_back(std::move(c));
    }
    j["cases"] = std::move(cases);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write corpus: " + path);
    out << j.dump() << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<TestCase> read_corpus_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read corpus: " + path);
    nlohmann::json j;
    in >> j;
    std::vector<TestCase> out;
    for (const auto& c : j.at("cases")) {
        TestCase tc;
        tc.id = c.at("id");
        tc.config_class = c.at("config_class") == "ci1" ? ConfigClass::CI1 : ConfigClass::CI2;
        tc.provenance = c.at("provenance") == "fk_generated" ? Provenance::fk_generated
                                                             : Provenance::random_orientation;
        tc.seed = c.at("seed");
        tc.target = pose_from_json(c.at("target"));
        if (c.contains("config")) tc.generating_config = config_from_json(c.at("config"));
        out.push_back(std::move(tc));
    }
    return out;
}

void write_report_json(const BenchReport& report, const std::string& path) {
    nlohmann::json j;
    j["config_class"] = to_string(report.config_class);
    j["mode"] = to_string(report.mode);
    for (const auto& [name, s] : report.stats) {
        nlohmann::json js;
        js["total_time_s"] = s.total_time_s;
        js["avg_iterations"] = s.avg_iterations;
        js["avg_time_per_iteration_s"] = s.avg_time_per_iteration_s;
        js["success_rate"] = s.success_rate;
        js["failure_count"] = s.failure_count;
        js["avg_position_error_mm"] = s.avg_position_error_mm;
        js["avg_orientation_error_rad"] = s.avg_orientation_error_rad;
        j["solvers"][name] = std::move(js);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_report_text(const BenchReport& report, std::ostream& out) {
    out << "corpus: " << to_string(report.config_class) << " / " << to_string(report.mode)
        << "\n";
    out << std::left << std::setw(28) << "index";
    for (const auto& [name, s] : report.stats) out << std::right << std::setw(16) << name;
    out << "\n";
    auto row = [&](const std::string& label, auto get) {
        out << std::left << std::setw(28) << label;
        for (const auto& [name, s] : report.stats) {
            out << std::right << std::setw(16) << std::setprecision(6) << get(s);
        }
        out << "\n";
    };
    row("total_time_s", [](const SolverStats& s) { return s.total_time_s; });
    row("avg_iterations", [](const SolverStats& s) { return s.avg_iterations; });
    row("avg_time_per_iter_s", [](const SolverStats& s) { return s.avg_time_per_iteration_s; });
    row("success_rate", [](const SolverStats& s) { return s.success_rate; });
    row("failure_count", [](const SolverStats& s) { return double(s.failure_count); });
    row("avg_pos_err_mm", [](const SolverStats& s) { return s.avg_position_error_mm; });
    row("avg_ori_err_rad", [](const SolverStats& s) { return s.avg_orientation_error_rad; });
}

void write_case_log_csv(const BenchReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write log: " + path);
    out << "id,solver,status,iterations,time_s,pos_err_mm,ori_err_rad,branch\n";
    out.precision(17);
    for (const auto& r : report.log) {
        out << r.id << ',' << r.solver << ',' << to_string(r.status) << ',' << r.iterations
            << ',' << r.time_s << ',' << r.pos_err_mm << ',' << r.ori_err_rad << ',' << r.branch
            << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Pose read_pose_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read pose: " + path);
    nlohmann::json j;
    in >> j;
    Pose p = pose_from_json(j);
    const double dev = (p.R.transpose() * p.R - Mat3::Identity()).norm();
    if (dev > 1e-6) throw std::runtime_error("pose R is not orthonormal: " + path);
    return p;
}

}  // namespace ccik
