#ifndef FRAMELAB_GRAPH_HPP
#define FRAMELAB_GRAPH_HPP

#include "framelab/dataset.hpp"
#include "framelab/frame.hpp"
#include "framelab/tensor.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace framelab {

constexpr std::size_t kNodeFeatureDim = 10;
constexpr std::size_t kEdgeFeatureDim = 10;
constexpr std::size_t kTargetDim = 3;

/// Column layout of the node feature matrix.
namespace node_col {
enum : std::size_t { x, y, bc_ux, bc_uy, bc_rz, fx, fy, mz, intermediate, phi };
}

/// Column layout of the edge feature matrix.
namespace edge_col {
enum : std::size_t { length, cos_theta, sin_theta, ea, ei, plastic_modulus, plastic_moment, is_col, is_beam, dir };
}

struct GraphNode {
    double x = 0.0;
    double y = 0.0;
    bool bc_ux = false;
    bool bc_uy = false;
    bool bc_rz = false;
    bool intermediate = false;
    std::optional<std::size_t> frame_node; // set for original joints

    bool fully_fixed() const { return bc_ux && bc_uy && bc_rz; }
};

struct DirectedEdge {
    std::size_t source = 0;
    std::size_t target = 0;
    std::size_t member = 0; // parent frame member
    int dir = 1;            // +1 along the member's node_i -> node_j sense
};

/// Load-independent graph structure. Original joints come first in frame
/// order, then bisection nodes in creation order. Sub-member k contributes
/// edges 2k (forward) and 2k + 1 (reverse).
struct GraphTopology {
    int refinement_level = 0;
    std::vector<GraphNode> nodes;
    std::vector<DirectedEdge> edges;

    std::size_t node_count() const { return nodes.size(); }
    std::size_t edge_count() const { return edges.size(); }
};

/// Joint-first bisection: every refinement level halves each current
/// sub-member and inserts a midpoint node flagged as intermediate.
GraphTopology graph_from_frame(const Frame& frame, int refinement_level = 0);

struct StructuralGraph {
    GraphTopology topology;
    Matrix node_features; // n x 10
    Matrix edge_features; // 2m x 10
    std::vector<bool> fixed_mask;

    std::size_t node_count() const { return topology.node_count(); }
};

/// Node rows carry geometry, restraints, loads (original loaded joints only),
/// the intermediate flag and phi; edge rows carry the sub-member properties.
StructuralGraph assemble_features(const Frame& frame, const LoadCase& loads,
                                  const GraphTopology& topology);

/// Edge feature row of the reverse direction: cos, sin and dir negated.
std::vector<double> reverse_edge_features(std::span<const double> row);

struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> std;
};

/// Population statistics per column; a std below 1e-12 is replaced by 1.
FeatureStats column_stats(const Matrix& rows);

struct NormStats {
    FeatureStats node;   // 10 node feature columns
    FeatureStats edge;   // 10 edge feature columns
    FeatureStats target; // u_x mm, u_y mm, r_z deg
    FeatureStats load;   // f_mid, f_top (dense baseline input)
    std::string convention = "population";
};

/// Statistics over the training records' graphs, targets and load inputs.
/// Throws Error(invalid_argument) for fewer than two records.
NormStats fit_normalizer(const Frame& frame, const std::vector<CaseRecord>& records,
                         int refinement_level = 0);

void normalize_rows(Matrix& rows, const FeatureStats& stats);
void denormalize_rows(Matrix& rows, const FeatureStats& stats);

/// n x 3 target matrix of a response field.
Matrix response_matrix(const ResponseField& field);
ResponseField response_from_matrix(const Matrix& m);

} // namespace framelab

#endif // FRAMELAB_GRAPH_HPP
