#include "framelab/frame.hpp"

#include "framelab/error.hpp"
#include "framelab/fem.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace framelab {

namespace {

using nlohmann::json;

constexpr int kFrameSchemaVersion = 1;

bool nearly_zero(double v, double scale) {
    return std::abs(v) <= 1e-9 * std::max(1.0, scale);
}

std::string member_label(const MemberSpec& m) {
    return "member " + std::to_string(m.id);
}

bool is_connected(const Frame& frame) {
    const std::size_t n = frame.nodes.size();
    if (n == 0) {
        return false;
    }
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    for (const auto& m : frame.members) {
        if (m.node_i < n && m.node_j < n) {
            parent[find(m.node_i)] = find(m.node_j);
        }
    }
    const std::size_t root = find(0);
    for (std::size_t v = 1; v < n; ++v) {
        if (find(v) != root) {
            return false;
        }
    }
    return true;
}

} // namespace

SectionProperties derive_section(double area, double moment_of_inertia, double yield_strength) {
    if (!(area > 0.0) || !(moment_of_inertia > 0.0) || !(yield_strength > 0.0)) {
        std::ostringstream os;
        os << "derive_section: area, inertia and yield strength must be positive (A=" << area
           << ", I=" << moment_of_inertia << ", F_y=" << yield_strength << ")";
        fail(ErrorKind::domain, os.str());
    }
    SectionProperties s;
    s.area = area;
    s.moment_of_inertia = moment_of_inertia;
    s.section_height = std::sqrt(12.0 * moment_of_inertia / area);
    s.plastic_modulus = area * s.section_height / 4.0;
    s.plastic_moment = yield_strength * s.plastic_modulus;
    return s;
}

const char* to_string(MemberKind kind) {
    return kind == MemberKind::column ? "column" : "beam";
}

double Frame::member_length(const MemberSpec& m) const {
    const auto& a = nodes.at(m.node_i);
    const auto& b = nodes.at(m.node_j);
    return std::hypot(b.x - a.x, b.y - a.y);
}

std::size_t Frame::restrained_dof_count() const {
    std::size_t count = 0;
    for (const auto& n : nodes) {
        count += static_cast<std::size_t>(n.restrained_count());
    }
    return count;
}

Frame build_reference_frame(const FrameConfig& config) {
    Frame f;
    f.material = config.material;
    f.story_height = config.story_height;
    f.bay_width = config.bay_width;
    f.phi_scwb = config.phi_scwb;

    const double h = config.story_height;
    const double w = config.bay_width;
    auto node = [](int id, double x, double y, bool fixed) {
        NodeSpec n;
        n.id = id;
        n.x = x;
        n.y = y;
        n.bc_ux = n.bc_uy = n.bc_rz = fixed;
        return n;
    };
    f.nodes = {
        node(1, 0.0, 0.0, true),   node(2, 0.0, h, false),     node(3, 0.0, 2.0 * h, false),
        node(4, w, 0.0, true),     node(5, w, h, false),       node(6, w, 2.0 * h, false),
    };
    f.loaded_mid_node = 1;
    f.loaded_top_node = 2;

    // Sections are only derivable from positive inputs; defer everything else
    // to validate_frame so a bad config reports all of its problems at once.
    auto section = [&](double a, double i) {
        if (a > 0.0 && i > 0.0 && config.material.yield_strength > 0.0) {
            return derive_section(a, i, config.material.yield_strength);
        }
        SectionProperties s;
        s.area = a;
        s.moment_of_inertia = i;
        return s;
    };
    const SectionProperties col = section(config.column_area, config.column_inertia);
    const SectionProperties beam = section(config.beam_area, config.beam_inertia);

    auto member = [](int id, std::size_t i, std::size_t j, SectionProperties s, MemberKind k) {
        MemberSpec m;
        m.id = id;
        m.node_i = i;
        m.node_j = j;
        m.section = s;
        m.kind = k;
        return m;
    };
    f.members = {
        member(1, 0, 1, col, MemberKind::column), member(2, 1, 2, col, MemberKind::column),
        member(3, 3, 4, col, MemberKind::column), member(4, 4, 5, col, MemberKind::column),
        member(5, 1, 4, beam, MemberKind::beam),  member(6, 2, 5, beam, MemberKind::beam),
    };

    const auto report = validate_frame(f);
    if (!report.empty()) {
        std::string msg = "invalid frame configuration:";
        for (const auto& line : report) {
            msg += "\n  " + line;
        }
        fail(ErrorKind::invalid_argument, msg);
    }
    return f;
}

std::vector<std::string> validate_frame(const Frame& frame) {
    std::vector<std::string> out;
    const auto n = frame.nodes.size();

    if (!(frame.material.youngs_modulus > 0.0)) {
        out.emplace_back("material: Young's modulus must be positive");
    }
    if (!(frame.material.yield_strength > 0.0)) {
        out.emplace_back("material: yield strength must be positive");
    }
    if (!(frame.story_height > 0.0)) {
        out.emplace_back("geometry: story height must be positive");
    }
    if (!(frame.bay_width > 0.0)) {
        out.emplace_back("geometry: bay width must be positive");
    }
    if (!(frame.phi_scwb > 0.0)) {
        out.emplace_back("geometry: SCWB factor must be positive");
    }
    if (n == 0) {
        out.emplace_back("frame has no nodes");
    }
    if (frame.members.empty()) {
        out.emplace_back("frame has no members");
    }
    if (frame.loaded_mid_node >= n || frame.loaded_top_node >= n) {
        out.emplace_back("loaded node index out of range");
    }

    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const auto& p = frame.nodes[a];
            const auto& q = frame.nodes[b];
            if (std::hypot(p.x - q.x, p.y - q.y) < 1e-9) {
                out.emplace_back("nodes " + std::to_string(p.id) + " and " + std::to_string(q.id) +
                                 " are coincident");
            }
        }
    }

    bool members_ok = true;
    for (const auto& m : frame.members) {
        if (m.node_i >= n || m.node_j >= n) {
            out.emplace_back(member_label(m) + ": endpoint does not exist");
            members_ok = false;
            continue;
        }
        if (m.node_i == m.node_j) {
            out.emplace_back(member_label(m) + ": self-loop member");
            members_ok = false;
            continue;
        }
        const auto& a = frame.nodes[m.node_i];
        const auto& b = frame.nodes[m.node_j];
        const double dx = b.x - a.x;
        const double dy = b.y - a.y;
        const double len = std::hypot(dx, dy);
        if (len < 1e-9) {
            out.emplace_back(member_label(m) + ": zero-length member");
            members_ok = false;
        } else if (nearly_zero(dx, len) && m.kind != MemberKind::column) {
            out.emplace_back(member_label(m) + ": vertical member must be a column");
        } else if (nearly_zero(dy, len) && m.kind != MemberKind::beam) {
            out.emplace_back(member_label(m) + ": horizontal member must be a beam");
        }
        if (!(m.section.area > 0.0) || !(m.section.moment_of_inertia > 0.0)) {
            out.emplace_back(member_label(m) + ": section area and inertia must be positive");
            members_ok = false;
        }
    }

    if (members_ok && n > 0 && !is_connected(frame)) {
        out.emplace_back("frame graph is not connected");
        members_ok = false;
    }

    if (out.empty() && members_ok) {
        const auto free = static_cast<Eigen::Index>(3 * n - frame.restrained_dof_count());
        if (frame.restrained_dof_count() == 0 || constrained_rank(frame) < free) {
            out.emplace_back("unconstrained rigid-body mode: constrained stiffness is singular");
        }
    }
    return out;
}

std::vector<NodalLoad> expand_loads(const Frame& frame, const LoadCase& loads) {
    std::vector<NodalLoad> out(frame.nodes.size());
    out.at(frame.loaded_mid_node).fx += loads.f_mid;
    out.at(frame.loaded_top_node).fx += loads.f_top;
    return out;
}

std::string frame_to_json(const Frame& frame) {
    json j;
    j["schema_version"] = kFrameSchemaVersion;
    j["story_height"] = frame.story_height;
    j["bay_width"] = frame.bay_width;
    j["phi_scwb"] = frame.phi_scwb;
    j["material"] = {{"youngs_modulus", frame.material.youngs_modulus},
                     {"yield_strength", frame.material.yield_strength}};
    j["nodes"] = json::array();
    for (const auto& n : frame.nodes) {
        j["nodes"].push_back({{"id", n.id},
                              {"x", n.x},
                              {"y", n.y},
                              {"bc_ux", int(n.bc_ux)},
                              {"bc_uy", int(n.bc_uy)},
                              {"bc_rz", int(n.bc_rz)},
                              {"is_intermediate_joint", int(n.is_intermediate_joint)}});
    }
    j["members"] = json::array();
    for (const auto& m : frame.members) {
        j["members"].push_back({{"id", m.id},
                                {"node_i", frame.nodes.at(m.node_i).id},
                                {"node_j", frame.nodes.at(m.node_j).id},
                                {"area", m.section.area},
                                {"moment_of_inertia", m.section.moment_of_inertia},
                                {"kind", to_string(m.kind)}});
    }
    j["loaded_nodes"] = {{"mid", frame.nodes.at(frame.loaded_mid_node).id},
                         {"top", frame.nodes.at(frame.loaded_top_node).id}};
    return j.dump(2);
}

Frame frame_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::parse, std::string("frame file: ") + e.what());
    }
    try {
        const int version = j.at("schema_version").get<int>();
        if (version > kFrameSchemaVersion) {
            fail(ErrorKind::version, "frame file: schema_version " + std::to_string(version) +
                                         " is newer than supported version " +
                                         std::to_string(kFrameSchemaVersion));
        }
        Frame f;
        f.story_height = j.at("story_height").get<double>();
        f.bay_width = j.at("bay_width").get<double>();
        f.phi_scwb = j.at("phi_scwb").get<double>();
        f.material.youngs_modulus = j.at("material").at("youngs_modulus").get<double>();
        f.material.yield_strength = j.at("material").at("yield_strength").get<double>();

        auto index_of = [&f](int id) -> std::size_t {
            for (std::size_t k = 0; k < f.nodes.size(); ++k) {
                if (f.nodes[k].id == id) {
                    return k;
                }
            }
            fail(ErrorKind::schema, "frame file: unknown node id " + std::to_string(id));
        };

        for (const auto& jn : j.at("nodes")) {
            NodeSpec n;
            n.id = jn.at("id").get<int>();
            n.x = jn.at("x").get<double>();
            n.y = jn.at("y").get<double>();
            n.bc_ux = jn.at("bc_ux").get<int>() != 0;
            n.bc_uy = jn.at("bc_uy").get<int>() != 0;
            n.bc_rz = jn.at("bc_rz").get<int>() != 0;
            n.is_intermediate_joint = jn.value("is_intermediate_joint", 0) != 0;
            f.nodes.push_back(n);
        }
        for (const auto& jm : j.at("members")) {
            MemberSpec m;
            m.id = jm.at("id").get<int>();
            m.node_i = index_of(jm.at("node_i").get<int>());
            m.node_j = index_of(jm.at("node_j").get<int>());
            const double a = jm.at("area").get<double>();
            const double i = jm.at("moment_of_inertia").get<double>();
            m.section = derive_section(a, i, f.material.yield_strength);
            const auto kind = jm.at("kind").get<std::string>();
            if (kind == "column") {
                m.kind = MemberKind::column;
            } else if (kind == "beam") {
                m.kind = MemberKind::beam;
            } else {
                fail(ErrorKind::schema, "frame file: unknown member kind '" + kind + "'");
            }
            f.members.push_back(m);
        }
        f.loaded_mid_node = index_of(j.at("loaded_nodes").at("mid").get<int>());
        f.loaded_top_node = index_of(j.at("loaded_nodes").at("top").get<int>());
        return f;
    } catch (const json::exception& e) {
        fail(ErrorKind::schema, std::string("frame file: ") + e.what());
    }
}

void save_frame(const Frame& frame, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        fail(ErrorKind::io, "cannot open '" + path + "' for writing");
    }
    out << frame_to_json(frame) << '\n';
    if (!out) {
        fail(ErrorKind::io, "write to '" + path + "' failed");
    }
}

Frame load_frame(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::io, "cannot open '" + path + "' for reading");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return frame_from_json(buf.str());
}

} // namespace framelab
