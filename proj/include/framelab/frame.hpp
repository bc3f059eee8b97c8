#ifndef FRAMELAB_FRAME_HPP
#define FRAMELAB_FRAME_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace framelab {

struct MaterialProperties {
    double youngs_modulus = 2.05e11; // Pa
    double yield_strength = 3.45e8;  // Pa
};

/// Rectangular-equivalent section. The derived members are filled by
/// derive_section() and must not be edited independently of area/inertia.
struct SectionProperties {
    double area = 0.0;              // m^2
    double moment_of_inertia = 0.0; // m^4
    double section_height = 0.0;    // m, sqrt(12 I / A)
    double plastic_modulus = 0.0;   // m^3, A h / 4
    double plastic_moment = 0.0;    // N m, F_y Z
};

/// Equivalent rectangular height, plastic modulus and plastic moment of a
/// section with the given area and strong-axis inertia.
/// Throws Error(domain) on non-positive input.
SectionProperties derive_section(double area, double moment_of_inertia, double yield_strength);

enum class MemberKind { column, beam };

const char* to_string(MemberKind kind);

struct NodeSpec {
    int id = 0; // 1-based label used in tables and files
    double x = 0.0;
    double y = 0.0;
    bool bc_ux = false;
    bool bc_uy = false;
    bool bc_rz = false;
    bool is_intermediate_joint = false;

    int restrained_count() const { return int(bc_ux) + int(bc_uy) + int(bc_rz); }
    bool fully_fixed() const { return bc_ux && bc_uy && bc_rz; }
};

struct MemberSpec {
    int id = 0;
    std::size_t node_i = 0; // index into Frame::nodes
    std::size_t node_j = 0;
    SectionProperties section;
    MemberKind kind = MemberKind::column;
};

struct Frame {
    std::vector<NodeSpec> nodes;
    std::vector<MemberSpec> members;
    MaterialProperties material;
    double story_height = 3.0;
    double bay_width = 4.0;
    double phi_scwb = 1.2;
    std::size_t loaded_mid_node = 1; // index of the mid-story loaded joint
    std::size_t loaded_top_node = 2; // index of the top-story loaded joint

    double member_length(const MemberSpec& m) const;
    std::size_t restrained_dof_count() const;
};

struct FrameConfig {
    double story_height = 3.0;
    double bay_width = 4.0;
    double phi_scwb = 1.2;
    MaterialProperties material;
    double column_area = 0.08;
    double column_inertia = 3.5e-4;
    double beam_area = 0.04;
    double beam_inertia = 2.5e-4;
};

/// Two-story one-bay frame. Nodes are numbered base-left=1, mid-left=2,
/// top-left=3, base-right=4, mid-right=5, top-right=6; loads act at 2 and 3.
/// Throws Error(invalid_argument) carrying the validation report when the
/// configuration yields an invalid frame.
Frame build_reference_frame(const FrameConfig& config = {});

/// Lists every invariant violation; an empty result means the frame is valid.
std::vector<std::string> validate_frame(const Frame& frame);

/// Lateral load case: horizontal forces at the mid- and top-story loaded joints.
struct LoadCase {
    double f_mid = 0.0; // N
    double f_top = 0.0; // N
};

struct NodalLoad {
    double fx = 0.0; // N
    double fy = 0.0; // N
    double mz = 0.0; // N m
};

/// Full per-node load vector, zero everywhere except the two loaded joints.
std::vector<NodalLoad> expand_loads(const Frame& frame, const LoadCase& loads);

std::string frame_to_json(const Frame& frame);
Frame frame_from_json(const std::string& text);
void save_frame(const Frame& frame, const std::string& path);
Frame load_frame(const std::string& path);

} // namespace framelab

#endif // FRAMELAB_FRAME_HPP
