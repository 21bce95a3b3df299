#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccik/dls.hpp"
#include "ccik/model.hpp"
#include "ccik/vsik.hpp"
#include "ccik/workspace.hpp"

namespace ccik {

enum class Provenance { fk_generated, random_orientation };

struct TestCase {
    int id = 0;
    ConfigClass config_class = ConfigClass::CI1;
    Pose target;
    Provenance provenance = Provenance::fk_generated;
    std::uint64_t seed = 0;
    std::optional<Config> generating_config;  // fk_generated targets only
};

// Targets from forward kinematics of uniformly sampled configurations
// (reachable by construction). Deterministic for a given seed.
std::vector<TestCase> generate_reachable_corpus(const StructuralParams& params, ConfigClass cls,
                                                int n, std::uint64_t seed);

// Positions sampled inside the translational workspace, orientations from
// uniform ZYX Euler angles; orientations are not guaranteed reachable.
std::vector<TestCase> generate_random_orientation_corpus(const StructuralParams& params,
                                                         ConfigClass cls, int n,
                                                         std::uint64_t seed);

// Position membership: some pointing direction on a coarse 10-degree sphere
// grid solves at this position.
bool position_in_translational_workspace(const Vec3& position, const StructuralParams& params,
                                         ConfigClass cls, const SolverSettings& settings = {});

// Orthonormal frame with the given unit vector as its third column.
Mat3 frame_from_direction(const Vec3& a);

struct SolverStats {
    double total_time_s = 0.0;
    double avg_iterations = 0.0;
    double avg_time_per_iteration_s = 0.0;
    double success_rate = 0.0;
    long failure_count = 0;
    double avg_position_error_mm = 0.0;
    double avg_orientation_error_rad = 0.0;
};

struct CaseRecord {
    int id = 0;
    std::string solver;
    SolveStatus status = SolveStatus::NoConvergence;
    int iterations = 0;
    double time_s = 0.0;
    double pos_err_mm = 0.0;
    double ori_err_rad = 0.0;
    int branch = 0;
};

struct BenchSolvers {
    bool vsik = true;
    bool dls = true;
};

struct BenchReport {
    ConfigClass config_class = ConfigClass::CI1;
    Provenance mode = Provenance::fk_generated;
    std::map<std::string, SolverStats> stats;
    std::vector<CaseRecord> log;
};

// Success on fk corpora is the full pose tolerance; on random-orientation
// corpora it is position success (the substituted-orientation protocol).
// Error averages run over all cases, failures included.
SolverStats stats_from_records(const std::vector<CaseRecord>& log, const std::string& solver,
                               Provenance mode, double pos_tol, double ori_tol);

BenchReport run_benchmark(const std::vector<TestCase>& corpus, const BenchSolvers& solvers,
                          const StructuralParams& params,
                          const SolverSettings& vsik_settings = {},
                          const DlsSettings& dls_settings = {});

// Writes <path_prefix>.csv and <path_prefix>.json boundary exports.
void export_workspace(const Vec3& position, const StructuralParams& params, ConfigClass cls,
                      const std::string& path_prefix, const WorkspaceOptions& opt = {});

void write_corpus_json(const std::vector<TestCase>& corpus, const std::string& path);
std::vector<TestCase> read_corpus_json(const std::string& path);

void write_report_json(const BenchReport& report, const std::string& path);
void write_report_text(const BenchReport& report, std::ostream& out);
void write_case_log_csv(const BenchReport& report, const std::string& path);

Pose read_pose_json(const std::string& path);

const char* to_string(Provenance p);
const char* to_string(ConfigClass c);

}  // namespace ccik
