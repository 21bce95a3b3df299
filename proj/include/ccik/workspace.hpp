#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "ccik/model.hpp"
#include "ccik/vsik.hpp"

namespace ccik {

// Coordinates rotated about z so the target position lies in the XZ
// half-plane with p_sx >= 0. All dexterity analysis happens here: the
// reachable pointing directions are mirror-symmetric in a_sy, so the unit
// disk (a_sx, a_sz) describes them fully.
struct SymmetryFrame {
    double gamma = 0.0;
    Vec3 p_s = Vec3::Zero();
    Vec3 a_s = Vec3(0, 0, 1);
    bool on_axis = false;  // p_sx ~ 0: boundaries degenerate to circles
};

SymmetryFrame to_symmetry_frame(const Pose& target);
SymmetryFrame symmetry_frame_at(const Vec3& position);

enum class BoundaryKind { TypeI_1, TypeI_2, TypeI_3, TypeI_4, TypeII };
enum class SweepParam { theta1, theta2 };
const char* to_string(BoundaryKind k);
const char* to_string(SweepParam p);

struct BoundaryPoint {
    double sweep_value = 0.0;
    double a_sx = 0.0;
    double a_sz = 0.0;
};

struct BoundaryCurve {
    BoundaryKind kind = BoundaryKind::TypeII;
    SweepParam driving_param = SweepParam::theta2;
    std::vector<BoundaryPoint> points;
};

struct WorkspaceOptions {
    int n_sweep = 600;  // type-I boundary discretization per driving angle
    int grid_n = 160;   // (theta1, theta2) grid for the membership region
    int raster_n = 256; // disk raster for region polygons / components
};

// A direction the robot can point at from the fixed position, as a disk
// point plus the implied free length variable (L1 for CI-1, Ls for CI-2).
struct DirectionSample {
    double a_sx = 0.0;
    double a_sz = 0.0;
    double ay_sq = 0.0;       // out-of-plane closure margin (= a_sy^2)
    double length_var = 0.0;
    double l1 = 0.0;
    double theta1 = 0.0;
};

std::optional<DirectionSample> ci1_direction(const SymmetryFrame& f, const StructuralParams& p,
                                             double theta1, double theta2);
// Fills out[0] with the (+) quadratic root and out[1] with the (-) root;
// returns a validity bitmask (slots keep their root label).
int ci2_directions(const SymmetryFrame& f, const StructuralParams& p, double theta1,
                   double theta2, std::array<DirectionSample, 2>& out);

// Point-in-region index over the images of admissible parameter cells.
struct RegionIndex {
    struct Quad {
        std::array<double, 8> xy{};  // 4 corners, (x, z) pairs
    };
    std::vector<Quad> quads;
    int bins = 64;
    std::vector<std::vector<int>> bin_ids;

    void finalize();
    bool contains(double x, double z) const;
    bool empty() const { return quads.empty(); }
};

struct BoundarySet {
    ConfigClass config_class = ConfigClass::CI1;
    Vec3 position = Vec3::Zero();
    std::vector<BoundaryCurve> curves;
    bool disconnected = false;
    bool on_axis = false;

    std::vector<std::vector<std::array<double, 2>>> region_polygons;
    std::vector<std::array<double, 2>> asz_intervals;   // on-axis feasibility
    std::vector<std::array<double, 2>> axis_unlimited;  // on-axis, limits ignored

    // membership machinery (not serialized)
    RegionIndex region;            // within configuration limits
    RegionIndex region_unlimited;  // limits ignored (type-II feasible side)

    enum class Side { Feasible, InfeasibleTypeI, InfeasibleTypeII };
    Side classify(const Vec3& a_s) const;
    // distance from a disk point to the nearest boundary polyline
    double min_boundary_distance(double a_sx, double a_sz) const;
};

BoundaryCurve ci1_boundary_1(const SymmetryFrame& f, const StructuralParams& p,
                             const WorkspaceOptions& opt = {});
BoundaryCurve ci1_boundary_2(const SymmetryFrame& f, const StructuralParams& p,
                             const WorkspaceOptions& opt = {});
enum class Ci1LengthBound { r_min, L_max };
BoundaryCurve ci1_boundary_34(const SymmetryFrame& f, const StructuralParams& p,
                              Ci1LengthBound which, const WorkspaceOptions& opt = {});
BoundaryCurve ci1_type2_envelope(const SymmetryFrame& f, const StructuralParams& p,
                                 const WorkspaceOptions& opt = {});
std::pair<BoundaryCurve, BoundaryCurve> ci2_boundaries_12(const SymmetryFrame& f,
                                                          const StructuralParams& p,
                                                          const WorkspaceOptions& opt = {});
std::pair<BoundaryCurve, BoundaryCurve> ci2_boundaries_34(const SymmetryFrame& f,
                                                          const StructuralParams& p,
                                                          const WorkspaceOptions& opt = {});
BoundaryCurve ci2_type2_envelope(const SymmetryFrame& f, const StructuralParams& p,
                                 const WorkspaceOptions& opt = {});

BoundarySet build_boundary_set(const Vec3& position, const StructuralParams& p, ConfigClass cls,
                               const WorkspaceOptions& opt = {});

enum class DirectionClass { Feasible, InfeasibleTypeI, InfeasibleTypeII };
const char* to_string(DirectionClass c);

// Classification consistent with the solver outcome: a real solution beyond
// the configuration limits is type-I infeasible, a non-real solution (or
// convergence failure) type-II.
DirectionClass classify_direction(const Pose& target, const StructuralParams& params,
                                  ConfigClass cls, const SolverSettings& settings = {});

struct ClosestDirection {
    Vec3 direction = Vec3(0, 0, 1);  // world frame, unit
    BoundaryKind source = BoundaryKind::TypeII;
    double angle = 0.0;              // great-circle distance to the target a
};

// Closest feasible pointing direction for an unreachable orientation:
// type-I boundaries are discretized as theta sequences, type-II uses the
// envelope curve. n_samples is the discretization per sweep.
ClosestDirection closest_feasible_direction(const Pose& target, const StructuralParams& params,
                                            ConfigClass cls, int n_samples = 600,
                                            const SolverSettings& settings = {});

// CSV columns: kind, sweep_param_value, a_sx, a_sz.
void write_boundary_csv(const BoundarySet& set, const std::string& path);
std::vector<BoundaryCurve> read_boundary_csv(const std::string& path);
void write_boundary_json(const BoundarySet& set, const std::string& path);
BoundarySet read_boundary_json(const std::string& path);

// Serializable-field equality (curves, polygons, flags); membership indexes
// are rebuilt, not compared.
bool same_boundary_data(const BoundarySet& a, const BoundarySet& b);

}  // namespace ccik
