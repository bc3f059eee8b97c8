#include "framelab/graph.hpp"

#include "framelab/error.hpp"

#include <cmath>

namespace framelab {

namespace {

struct SubMember {
    std::size_t a;
    std::size_t b;
    std::size_t member;
};

} // namespace

GraphTopology graph_from_frame(const Frame& frame, int refinement_level) {
    if (refinement_level < 0) {
        fail(ErrorKind::invalid_argument, "graph_from_frame: refinement level must be >= 0");
    }
    GraphTopology g;
    g.refinement_level = refinement_level;
    for (std::size_t k = 0; k < frame.nodes.size(); ++k) {
        const auto& n = frame.nodes[k];
        g.nodes.push_back({n.x, n.y, n.bc_ux, n.bc_uy, n.bc_rz, n.is_intermediate_joint, k});
    }

    std::vector<SubMember> subs;
    for (std::size_t m = 0; m < frame.members.size(); ++m) {
        subs.push_back({frame.members[m].node_i, frame.members[m].node_j, m});
    }
    for (int level = 0; level < refinement_level; ++level) {
        std::vector<SubMember> next;
        next.reserve(2 * subs.size());
        for (const auto& s : subs) {
            const auto& p = g.nodes[s.a];
            const auto& q = g.nodes[s.b];
            GraphNode mid;
            mid.x = 0.5 * (p.x + q.x);
            mid.y = 0.5 * (p.y + q.y);
            mid.intermediate = true;
            const std::size_t id = g.nodes.size();
            g.nodes.push_back(mid);
            next.push_back({s.a, id, s.member});
            next.push_back({id, s.b, s.member});
        }
        subs = std::move(next);
    }

    g.edges.reserve(2 * subs.size());
    for (const auto& s : subs) {
        g.edges.push_back({s.a, s.b, s.member, +1});
        g.edges.push_back({s.b, s.a, s.member, -1});
    }
    return g;
}

StructuralGraph assemble_features(const Frame& frame, const LoadCase& loads,
                                  const GraphTopology& topology) {
    for (const auto& n : topology.nodes) {
        if (n.frame_node && *n.frame_node >= frame.nodes.size()) {
            fail(ErrorKind::invalid_argument, "assemble_features: topology does not match frame");
        }
    }
    for (const auto& e : topology.edges) {
        if (e.member >= frame.members.size() || e.source >= topology.node_count() ||
            e.target >= topology.node_count()) {
            fail(ErrorKind::invalid_argument, "assemble_features: topology does not match frame");
        }
    }

    StructuralGraph g;
    g.topology = topology;
    const auto nodal = expand_loads(frame, loads);

    g.node_features = Matrix(topology.node_count(), kNodeFeatureDim);
    g.fixed_mask.resize(topology.node_count());
    for (std::size_t k = 0; k < topology.node_count(); ++k) {
        const auto& n = topology.nodes[k];
        auto row = g.node_features.row(k);
        row[node_col::x] = n.x;
        row[node_col::y] = n.y;
        row[node_col::bc_ux] = n.bc_ux ? 1.0 : 0.0;
        row[node_col::bc_uy] = n.bc_uy ? 1.0 : 0.0;
        row[node_col::bc_rz] = n.bc_rz ? 1.0 : 0.0;
        if (n.frame_node) {
            const auto& l = nodal[*n.frame_node];
            row[node_col::fx] = l.fx;
            row[node_col::fy] = l.fy;
            row[node_col::mz] = l.mz;
        }
        row[node_col::intermediate] = n.intermediate ? 1.0 : 0.0;
        row[node_col::phi] = frame.phi_scwb;
        g.fixed_mask[k] = n.fully_fixed();
    }

    const double e_mod = frame.material.youngs_modulus;
    g.edge_features = Matrix(topology.edge_count(), kEdgeFeatureDim);
    for (std::size_t k = 0; k < topology.edge_count(); ++k) {
        const auto& e = topology.edges[k];
        const auto& s = topology.nodes[e.source];
        const auto& t = topology.nodes[e.target];
        const auto& member = frame.members[e.member];
        const double dx = t.x - s.x;
        const double dy = t.y - s.y;
        const double len = std::hypot(dx, dy);
        auto row = g.edge_features.row(k);
        row[edge_col::length] = len;
        row[edge_col::cos_theta] = dx / len;
        row[edge_col::sin_theta] = dy / len;
        row[edge_col::ea] = e_mod * member.section.area;
        row[edge_col::ei] = e_mod * member.section.moment_of_inertia;
        row[edge_col::plastic_modulus] = member.section.plastic_modulus;
        row[edge_col::plastic_moment] = member.section.plastic_moment;
        row[edge_col::is_col] = member.kind == MemberKind::column ? 1.0 : 0.0;
        row[edge_col::is_beam] = member.kind == MemberKind::beam ? 1.0 : 0.0;
        row[edge_col::dir] = static_cast<double>(e.dir);
    }
    return g;
}

std::vector<double> reverse_edge_features(std::span<const double> row) {
    std::vector<double> out(row.begin(), row.end());
    out[edge_col::cos_theta] = -out[edge_col::cos_theta];
    out[edge_col::sin_theta] = -out[edge_col::sin_theta];
    out[edge_col::dir] = -out[edge_col::dir];
    return out;
}

FeatureStats column_stats(const Matrix& rows) {
    if (rows.rows() == 0) {
        fail(ErrorKind::invalid_argument, "column_stats: no rows");
    }
    FeatureStats s;
    s.mean.assign(rows.cols(), 0.0);
    s.std.assign(rows.cols(), 0.0);
    const double n = static_cast<double>(rows.rows());
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        for (std::size_t c = 0; c < rows.cols(); ++c) {
            s.mean[c] += rows(r, c);
        }
    }
    for (auto& m : s.mean) {
        m /= n;
    }
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        for (std::size_t c = 0; c < rows.cols(); ++c) {
            const double d = rows(r, c) - s.mean[c];
            s.std[c] += d * d;
        }
    }
    for (auto& v : s.std) {
        v = std::sqrt(v / n);
        if (v < 1e-12) {
            v = 1.0;
        }
    }
    return s;
}

NormStats fit_normalizer(const Frame& frame, const std::vector<CaseRecord>& records,
                         int refinement_level) {
    if (records.size() < 2) {
        fail(ErrorKind::invalid_argument, "fit_normalizer: need at least two training records");
    }
    const auto topo = graph_from_frame(frame, refinement_level);
    const std::size_t n = topo.node_count();
    const std::size_t e = topo.edge_count();
    const std::size_t nf = frame.nodes.size();

    Matrix node_rows(records.size() * n, kNodeFeatureDim);
    Matrix edge_rows(records.size() * e, kEdgeFeatureDim);
    Matrix target_rows(records.size() * nf, kTargetDim);
    Matrix load_rows(records.size(), 2);
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.targets.size() != nf) {
            fail(ErrorKind::invalid_argument, "fit_normalizer: record " +
                                                  std::to_string(rec.case_id) +
                                                  " does not match the frame's node count");
        }
        const auto g = assemble_features(frame, rec.loads(), topo);
        std::copy(g.node_features.values().begin(), g.node_features.values().end(),
                  node_rows.values().begin() + static_cast<std::ptrdiff_t>(r * n * kNodeFeatureDim));
        std::copy(g.edge_features.values().begin(), g.edge_features.values().end(),
                  edge_rows.values().begin() + static_cast<std::ptrdiff_t>(r * e * kEdgeFeatureDim));
        for (std::size_t k = 0; k < nf; ++k) {
            target_rows(r * nf + k, 0) = rec.targets[k].ux_mm;
            target_rows(r * nf + k, 1) = rec.targets[k].uy_mm;
            target_rows(r * nf + k, 2) = rec.targets[k].rz_deg;
        }
        load_rows(r, 0) = rec.f_mid;
        load_rows(r, 1) = rec.f_top;
    }
    NormStats s;
    s.node = column_stats(node_rows);
    s.edge = column_stats(edge_rows);
    s.target = column_stats(target_rows);
    s.load = column_stats(load_rows);
    return s;
}

void normalize_rows(Matrix& rows, const FeatureStats& stats) {
    if (stats.mean.size() != rows.cols() || stats.std.size() != rows.cols()) {
        fail(ErrorKind::invalid_argument, "normalize_rows: dimension mismatch");
    }
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        for (std::size_t c = 0; c < rows.cols(); ++c) {
            rows(r, c) = (rows(r, c) - stats.mean[c]) / stats.std[c];
        }
    }
}

void denormalize_rows(Matrix& rows, const FeatureStats& stats) {
    if (stats.mean.size() != rows.cols() || stats.std.size() != rows.cols()) {
        fail(ErrorKind::invalid_argument, "denormalize_rows: dimension mismatch");
    }
    for (std::size_t r = 0; r < rows.rows(); ++r) {
        for (std::size_t c = 0; c < rows.cols(); ++c) {
            rows(r, c) = rows(r, c) * stats.std[c] + stats.mean[c];
        }
    }
}

Matrix response_matrix(const ResponseField& field) {
    Matrix m(field.size(), kTargetDim);
    for (std::size_t k = 0; k < field.size(); ++k) {
        m(k, 0) = field[k].ux_mm;
        m(k, 1) = field[k].uy_mm;
        m(k, 2) = field[k].rz_deg;
    }
    return m;
}

ResponseField response_from_matrix(const Matrix& m) {
    ResponseField f(m.rows());
    for (std::size_t k = 0; k < m.rows(); ++k) {
        f[k] = {m(k, 0), m(k, 1), m(k, 2)};
    }
    return f;
}

} // namespace framelab
