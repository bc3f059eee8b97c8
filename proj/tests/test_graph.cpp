#include "framelab/error.hpp"
#include "framelab/graph.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace framelab;

namespace {

CaseRecord record_with(double ux3, int id) {
    const auto f = build_reference_frame();
    CaseRecord r;
    r.case_id = id;
    r.f_mid = 1e5 * id;
    r.f_top = 5e4 * id;
    r.targets.assign(f.nodes.size(), {});
    r.targets[2].ux_mm = ux3;
    for (const auto& n : f.nodes) {
        r.node_ids.push_back(n.id);
    }
    return r;
}

} // namespace

TEST_CASE("bisection counts") {
    const auto f = build_reference_frame();
    for (int i = 0; i <= 4; ++i) {
        const auto g = graph_from_frame(f, i);
        const std::size_t p = std::size_t{1} << i;
        CHECK(g.node_count() == 6 + 6 * (p - 1));
        CHECK(g.edge_count() == 12 * p);
    }
    CHECK(graph_from_frame(f, 1).node_count() == 12);
    CHECK(graph_from_frame(f, 1).edge_count() == 24);
    CHECK_THROWS_AS(graph_from_frame(f, -1), Error);
}

TEST_CASE("joint-first ordering and paired edges") {
    const auto f = build_reference_frame();
    const auto g = graph_from_frame(f, 2);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        if (k < 6) {
            REQUIRE(g.nodes[k].frame_node.has_value());
            CHECK(*g.nodes[k].frame_node == k);
            CHECK_FALSE(g.nodes[k].intermediate);
        } else {
            CHECK_FALSE(g.nodes[k].frame_node.has_value());
            CHECK(g.nodes[k].intermediate);
        }
    }
    for (std::size_t k = 0; k < g.edge_count(); k += 2) {
        CHECK(g.edges[k].dir == 1);
        CHECK(g.edges[k + 1].dir == -1);
        CHECK(g.edges[k].source == g.edges[k + 1].target);
        CHECK(g.edges[k].target == g.edges[k + 1].source);
    }
}

TEST_CASE("refinement preserves total length") {
    const auto f = build_reference_frame();
    double base = 0.0;
    for (int i = 0; i <= 4; ++i) {
        const auto g = assemble_features(f, {}, graph_from_frame(f, i));
        double total = 0.0;
        for (std::size_t e = 0; e < g.edge_features.rows(); e += 2) {
            total += g.edge_features(e, edge_col::length);
        }
        if (i == 0) {
            base = total;
            CHECK(base == doctest::Approx(4 * 3.0 + 2 * 4.0));
        }
        CHECK(std::abs(total - base) <= 1e-12 * base);
    }
}

TEST_CASE("feature assembly for (200 kN, 150 kN)") {
    const auto f = build_reference_frame();
    const auto g = assemble_features(f, {2e5, 1.5e5}, graph_from_frame(f));
    CHECK(g.node_features(1, node_col::fx) == 200000.0);
    CHECK(g.node_features(2, node_col::fx) == 150000.0);
    for (std::size_t k = 0; k < 6; ++k) {
        CHECK(g.node_features(k, node_col::fy) == 0.0);
        CHECK(g.node_features(k, node_col::mz) == 0.0);
        CHECK(g.node_features(k, node_col::phi) == 1.2);
    }
    CHECK(g.fixed_mask[0]);
    CHECK(g.fixed_mask[3]);
    CHECK_FALSE(g.fixed_mask[1]);
    // Member 1-2 is the first column, node 1 -> node 2 upward.
    CHECK(g.edge_features(0, edge_col::cos_theta) == doctest::Approx(0.0));
    CHECK(g.edge_features(0, edge_col::sin_theta) == 1.0);
    CHECK(g.edge_features(0, edge_col::is_col) == 1.0);
    CHECK(g.edge_features(0, edge_col::dir) == 1.0);
    CHECK(g.edge_features(1, edge_col::sin_theta) == -1.0);
    CHECK(g.edge_features(1, edge_col::dir) == -1.0);
}

TEST_CASE("zero loads give zero load columns") {
    const auto f = build_reference_frame();
    const auto g = assemble_features(f, {}, graph_from_frame(f, 2));
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        CHECK(g.node_features(k, node_col::fx) == 0.0);
    }
}

TEST_CASE("topology is load independent") {
    const auto f = build_reference_frame();
    const auto t = graph_from_frame(f, 1);
    const auto a = assemble_features(f, {1e5, 2e5}, t);
    const auto b = assemble_features(f, {7e5, 3e5}, t);
    CHECK(a.edge_features == b.edge_features);
    for (std::size_t k = 0; k < a.node_count(); ++k) {
        for (std::size_t c = 0; c < kNodeFeatureDim; ++c) {
            if (c != node_col::fx && c != node_col::fy && c != node_col::mz) {
                CHECK(a.node_features(k, c) == b.node_features(k, c));
            }
        }
    }
}

TEST_CASE("edge reversal and direction cosines") {
    const auto f = build_reference_frame();
    for (int i = 0; i <= 3; ++i) {
        const auto g = assemble_features(f, {1e5, 1e5}, graph_from_frame(f, i));
        for (std::size_t e = 0; e < g.edge_features.rows(); ++e) {
            const auto row = g.edge_features.row(e);
            const auto twice = reverse_edge_features(reverse_edge_features(row));
            CHECK(std::equal(twice.begin(), twice.end(), row.begin()));
            const double c = row[edge_col::cos_theta];
            const double s = row[edge_col::sin_theta];
            CHECK(c * c + s * s == 1.0);
            for (double v : row) {
                CHECK(std::isfinite(v));
            }
            if (e % 2 == 0) {
                const auto rev = reverse_edge_features(row);
                const auto other = g.edge_features.row(e + 1);
                CHECK(std::equal(rev.begin(), rev.end(), other.begin()));
            }
        }
    }
}

TEST_CASE("population statistics") {
    Matrix m(2, 2);
    m(0, 0) = 2.0;
    m(1, 0) = 4.0;
    const auto s = column_stats(m);
    CHECK(s.mean[0] == 3.0);
    CHECK(s.std[0] == 1.0);
    CHECK(s.mean[1] == 0.0);
    CHECK(s.std[1] == 1.0);
    normalize_rows(m, s);
    CHECK(m(0, 0) == -1.0);
    CHECK(m(1, 0) == 1.0);
    CHECK(m(0, 1) == 0.0);
}

TEST_CASE("fit_normalizer on two records") {
    const auto f = build_reference_frame();
    const auto s = fit_normalizer(f, {record_with(2.0, 1), record_with(4.0, 2)});
    CHECK(s.convention == "population");
    // fy is identically zero in every row.
    CHECK(s.node.mean[node_col::fy] == 0.0);
    CHECK(s.node.std[node_col::fy] == 1.0);
    CHECK(s.load.mean[0] == 1.5e5);
    CHECK(s.load.std[0] == 5e4);
    CHECK_THROWS_AS(fit_normalizer(f, {record_with(2.0, 1)}), Error);
}

TEST_CASE("normalisation round trip") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(10.0, 40.0);
    Matrix m(30, 10);
    for (auto& v : m.values()) {
        v = nd(rng);
    }
    const auto s = column_stats(m);
    Matrix n = m;
    normalize_rows(n, s);
    denormalize_rows(n, s);
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(std::abs(n.values()[i] - m.values()[i]) <= 1e-12 * std::max(1.0, std::abs(m.values()[i])));
    }
}
