#ifndef FRAMELAB_FEM_HPP
#define FRAMELAB_FEM_HPP

#include "framelab/frame.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <vector>

namespace framelab {

using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Vector6 = Eigen::Matrix<double, 6, 1>;

/// Euler-Bernoulli plane-frame element, DOF order (u_i, v_i, rz_i, u_j, v_j, rz_j).
struct ElementStiffness {
    Matrix6 local;     // member axes
    Matrix6 transform; // global -> local
    Matrix6 global;    // T^T k T
    double length = 0.0;
    double cos_theta = 1.0;
    double sin_theta = 0.0;
};

ElementStiffness element_stiffness(const NodeSpec& a, const NodeSpec& b,
                                   const SectionProperties& section, double youngs_modulus);
ElementStiffness element_stiffness(const Frame& frame, std::size_t member_index);

/// Local stiffness with the rotational DOF of the flagged ends statically
/// condensed out (moment release).
Matrix6 release_end_moments(const Matrix6& local, bool release_i, bool release_j);

struct GlobalSystem {
    Eigen::MatrixXd full;        // 3n x 3n, before constraints
    std::vector<int> free_dofs;  // global DOF index of each reduced row
    Eigen::MatrixXd reduced;     // free x free, restrained rows/cols eliminated
};

/// Throws Error(mechanism) when the constrained system is singular.
GlobalSystem assemble_global(const Frame& frame);

/// Numerical rank of the constrained stiffness; equals free DOF count iff stable.
Eigen::Index constrained_rank(const Frame& frame);

/// Per-node response in output units.
struct NodeResponse {
    double ux_mm = 0.0;
    double uy_mm = 0.0;
    double rz_deg = 0.0;
};

using ResponseField = std::vector<NodeResponse>;

/// Converts a global SI displacement vector (m, rad) into mm/deg per node.
ResponseField to_response_field(const Eigen::VectorXd& displacements);

/// SI displacement vector of the linear problem K d = F (length 3n).
Eigen::VectorXd solve_linear_dofs(const Frame& frame, const std::vector<NodalLoad>& loads);

ResponseField solve_linear(const Frame& frame, const LoadCase& loads);

/// Member end moments (N m) for a global SI displacement vector, elastic members.
std::vector<std::array<double, 2>> member_end_moments(const Frame& frame,
                                                      const Eigen::VectorXd& displacements);

/// Smallest proportional load factor at which a member end reaches M_p under
/// purely elastic response. Infinity for a zero load case.
double first_yield_factor(const Frame& frame, const LoadCase& loads);

enum class HingeStatus { elastic, yielded };

struct HingeState {
    std::size_t member = 0;
    int end = 0; // 0 = node_i, 1 = node_j
    HingeStatus status = HingeStatus::elastic;
    double plastic_moment = 0.0;
    double hardening_ratio = 0.02;
    double yield_load_factor = 0.0; // meaningful only when yielded
    double moment = 0.0;            // end moment at full load, N m
};

struct StoryShears {
    double v1 = 0.0; // lower story
    double v2 = 0.0; // upper story
};

StoryShears story_shears(const LoadCase& loads);

struct CurvePoint {
    double load_factor = 0.0;
    StoryShears shears;
    ResponseField response;
};

struct PushoverCurve {
    std::vector<CurvePoint> points;
};

struct NonlinearOptions {
    int n_steps = 20;
    double hardening_ratio = 0.02;
    int max_bisections = 20;
};

struct NonlinearResult {
    ResponseField response;
    std::vector<HingeState> hinges; // two entries per member, member-major
    PushoverCurve curve;

    std::size_t yielded_count() const;
};

/// Proportional monotonic loading 0 -> 1 with concentrated plastic hinges.
/// Each member is a parallel pair of an elastic component (ratio alpha) and an
/// elastic-perfectly-plastic component (1 - alpha); once the total end moment
/// reaches M_p the plastic component's end is released. Steps that cross a
/// yield threshold are bisected on the load factor so hinges form at the
/// crossing point.
NonlinearResult solve_nonlinear(const Frame& frame, const LoadCase& loads,
                                const NonlinearOptions& options = {});

} // namespace framelab

#endif // FRAMELAB_FEM_HPP
