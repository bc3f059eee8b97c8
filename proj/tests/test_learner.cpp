#include "framelab/error.hpp"
#include "framelab/learner.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace framelab;

namespace {

Parameter& param(std::vector<Parameter>& ps, const std::string& name) {
    for (auto& p : ps) {
        if (p.name == name) {
            return p;
        }
    }
    FAIL("no parameter " << name);
    return ps.front();
}

const Parameter& param(const std::vector<Parameter>& ps, const std::string& name) {
    return param(const_cast<std::vector<Parameter>&>(ps), name);
}

void randomise(Matrix& m, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    for (auto& v : m.values()) {
        v = nd(rng);
    }
}

// Straight-line evaluation of the message-passing network from its named
// parameters, written with plain nested loops.
std::vector<std::vector<double>> oracle_forward(const std::vector<Parameter>& ps,
                                                const GnnConfig& cfg, const GraphTopology& topo,
                                                const Matrix& ef, const Matrix& x) {
    const std::size_t d = cfg.hidden_dim;
    const std::size_t n = topo.node_count();
    auto w = [&](const std::string& name) -> const Matrix& { return param(ps, name).value; };
    std::vector<std::vector<double>> h(n, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < kNodeFeatureDim; ++b) {
                h[i][a] += w("input.weight")(a, b) * x(i, b);
            }
        }
    }
    for (std::size_t k = 0; k < cfg.layer_count; ++k) {
        const std::string pre = "conv" + std::to_string(k) + ".";
        std::vector<std::vector<double>> sum(n, std::vector<double>(d, 0.0));
        std::vector<int> deg(n, 0);
        for (std::size_t e = 0; e < topo.edge_count(); ++e) {
            std::vector<double> hid(cfg.edge_hidden, 0.0);
            for (std::size_t a = 0; a < cfg.edge_hidden; ++a) {
                double z = w(pre + "edge_net.0.bias")(a, 0);
                for (std::size_t b = 0; b < kEdgeFeatureDim; ++b) {
                    z += w(pre + "edge_net.0.weight")(a, b) * ef(e, b);
                }
                hid[a] = z > 0 ? z : 0;
            }
            const auto src = topo.edges[e].source;
            const auto dst = topo.edges[e].target;
            ++deg[dst];
            for (std::size_t r = 0; r < d; ++r) {
                for (std::size_t c = 0; c < d; ++c) {
                    double wrc = w(pre + "edge_net.2.bias")(r * d + c, 0);
                    for (std::size_t a = 0; a < cfg.edge_hidden; ++a) {
                        wrc += w(pre + "edge_net.2.weight")(r * d + c, a) * hid[a];
                    }
                    sum[dst][r] += wrc * h[src][c];
                }
            }
        }
        std::vector<std::vector<double>> next(n, std::vector<double>(d, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t r = 0; r < d; ++r) {
                double v = sum[i][r] / deg[i];
                if (cfg.self_term) {
                    v += w(pre + "bias")(r, 0);
                    for (std::size_t c = 0; c < d; ++c) {
                        v += w(pre + "root.weight")(r, c) * h[i][c];
                    }
                }
                next[i][r] = v > 0 ? v : 0;
            }
        }
        h = next;
    }
    std::vector<std::vector<double>> y(n, std::vector<double>(kTargetDim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> q(d);
        for (std::size_t a = 0; a < d; ++a) {
            double z = w("decoder.0.bias")(a, 0);
            for (std::size_t b = 0; b < d; ++b) {
                z += w("decoder.0.weight")(a, b) * h[i][b];
            }
            q[a] = z > 0 ? z : 0;
        }
        for (std::size_t c = 0; c < kTargetDim; ++c) {
            double z = w("decoder.2.bias")(c, 0);
            for (std::size_t a = 0; a < d; ++a) {
                z += w("decoder.2.weight")(c, a) * q[a];
            }
            y[i][c] = z;
        }
    }
    return y;
}

// Small random directed graph where every node has an incoming edge.
GraphTopology random_topology(std::mt19937_64& rng, std::size_t n) {
    GraphTopology t;
    t.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.edges.push_back({(i + 1) % n, i, 0, 1});
    }
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (int extra = 0; extra < 6; ++extra) {
        t.edges.push_back({pick(rng), pick(rng), 0, -1});
    }
    return t;
}

std::vector<CaseRecord> small_dataset(int n, std::uint64_t seed) {
    DatasetConfig c;
    c.n_cases = n;
    c.seed = seed;
    return generate_dataset(build_reference_frame(), c);
}

TrainedModel fresh_model(ModelKind kind, std::size_t hidden, const std::vector<CaseRecord>& data,
                         std::uint64_t seed = 3) {
    const auto frame = build_reference_frame();
    TrainConfig cfg;
    cfg.kind = kind;
    cfg.hidden_dim = hidden;
    cfg.seed = seed;
    return make_model(cfg, fit_normalizer(frame, data), frame.nodes.size());
}

// Max over all parameters of |analytic - numeric| / max(|analytic|, |numeric|, floor).
// The floor keeps tiny gradients from being judged on difference round-off.
double gradient_check(TrainedModel& model, const std::vector<CaseRecord>& batch, double floor) {
    const auto frame = build_reference_frame();
    zero_grad(model.parameters());
    batch_loss(model, frame, batch, true);
    double worst = 0.0;
    const double h = 1e-5;
    for (auto& p : model.parameters()) {
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double keep = p.value.values()[i];
            p.value.values()[i] = keep + h;
            const double up = batch_loss(model, frame, batch, false);
            p.value.values()[i] = keep - h;
            const double down = batch_loss(model, frame, batch, false);
            p.value.values()[i] = keep;
            const double numeric = (up - down) / (2 * h);
            const double analytic = p.grad.values()[i];
            const double scale = std::max({std::abs(numeric), std::abs(analytic), floor});
            worst = std::max(worst, std::abs(numeric - analytic) / scale);
        }
    }
    return worst;
}

} // namespace

TEST_CASE("parameter inventory") {
    SurrogateModel m(GnnConfig{}, 1);
    const auto& ps = m.parameters();
    // input + 3 x (edge net 4 + root + bias) + decoder 4
    CHECK(ps.size() == 1 + 3 * 6 + 4);
    CHECK(param(ps, "conv0.edge_net.2.weight").value.rows() == 64 * 64);
    CHECK(param(ps, "conv0.edge_net.0.weight").value.cols() == kEdgeFeatureDim);
    CHECK(param(ps, "input.weight").value.cols() == kNodeFeatureDim);
    const std::size_t expect = 64 * 10 + 3 * (32 * 10 + 32 + 4096 * 32 + 4096 + 64 * 64 + 64) +
                               64 * 64 + 64 + 3 * 64 + 3;
    CHECK(parameter_count(ps) == expect);

    SurrogateModel lit(GnnConfig{64, 32, 3, false}, 1);
    CHECK(lit.parameters().size() == 1 + 3 * 4 + 4);

    BaselineModel b(64, 18, 1);
    CHECK(parameter_count(b.parameters()) == 2 * 64 + 64 + 64 * 64 + 64 + 64 * 18 + 18);
}

TEST_CASE("initialisation is uniform within the fan-in bound and seeded") {
    SurrogateModel a(GnnConfig{}, 5);
    SurrogateModel b(GnnConfig{}, 5);
    SurrogateModel c(GnnConfig{}, 6);
    CHECK(a.parameters()[3].value == b.parameters()[3].value);
    CHECK_FALSE(a.parameters()[3].value == c.parameters()[3].value);
    const auto& w = param(a.parameters(), "conv1.edge_net.2.weight").value;
    const double bound = 1.0 / std::sqrt(32.0);
    CHECK(*std::max_element(w.values().begin(), w.values().end()) <= bound);
    CHECK(*std::min_element(w.values().begin(), w.values().end()) >= -bound);
}

TEST_CASE("all-zero parameters predict zero") {
    SurrogateModel m(GnnConfig{}, 1);
    for (auto& p : m.parameters()) {
        p.value.fill(0.0);
    }
    const auto f = build_reference_frame();
    const auto g = assemble_features(f, {2e5, 1e5}, graph_from_frame(f));
    const auto y = m.forward(g.topology, g.edge_features, std::vector<Matrix>{g.node_features});
    for (double v : y[0].values()) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("identity chain on a single node") {
    const std::size_t d = kNodeFeatureDim;
    SurrogateModel m(GnnConfig{d, 4, 3, false}, 2);
    auto& ps = m.parameters();
    auto& win = param(ps, "input.weight").value;
    win.fill(0.0);
    for (std::size_t i = 0; i < d; ++i) {
        win(i, i) = 1.0;
    }
    for (int k = 0; k < 3; ++k) {
        const std::string pre = "conv" + std::to_string(k) + ".";
        param(ps, pre + "edge_net.2.weight").value.fill(0.0);
        auto& b2 = param(ps, pre + "edge_net.2.bias").value;
        b2.fill(0.0);
        for (std::size_t i = 0; i < d; ++i) {
            b2(i * d + i, 0) = 1.0;
        }
    }
    GraphTopology t;
    t.nodes.resize(1);
    t.edges = {{0, 0, 0, 1}, {0, 0, 0, -1}};
    Matrix ef(2, kEdgeFeatureDim, 0.3);
    Matrix x(1, kNodeFeatureDim);
    for (std::size_t i = 0; i < d; ++i) {
        x(0, i) = 0.5 + 0.1 * static_cast<double>(i);
    }
    const auto y = m.forward(t, ef, std::vector<Matrix>{x});
    const auto& d1 = param(ps, "decoder.0.weight").value;
    const auto& c1 = param(ps, "decoder.0.bias").value;
    const auto& d2 = param(ps, "decoder.2.weight").value;
    const auto& c2 = param(ps, "decoder.2.bias").value;
    for (std::size_t c = 0; c < 3; ++c) {
        double expect = c2(c, 0);
        for (std::size_t a = 0; a < d; ++a) {
            double z = c1(a, 0);
            for (std::size_t b = 0; b < d; ++b) {
                z += d1(a, b) * x(0, b);
            }
            expect += d2(c, a) * std::max(z, 0.0);
        }
        CHECK(y[0](0, c) == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("forward matches the straight-line oracle") {
    std::mt19937_64 rng(21);
    for (bool self_term : {true, false}) {
        GnnConfig cfg{5, 7, 3, self_term};
        SurrogateModel m(cfg, 4);
        for (auto& p : m.parameters()) {
            randomise(p.value, rng, 0.5);
        }
        const auto topo = random_topology(rng, 5);
        Matrix ef(topo.edge_count(), kEdgeFeatureDim);
        randomise(ef, rng);
        std::vector<Matrix> xs(3, Matrix(5, kNodeFeatureDim));
        for (auto& x : xs) {
            randomise(x, rng);
        }
        const auto y = m.forward(topo, ef, xs);
        for (std::size_t s = 0; s < xs.size(); ++s) {
            const auto o = oracle_forward(m.parameters(), cfg, topo, ef, xs[s]);
            for (std::size_t i = 0; i < 5; ++i) {
                for (std::size_t c = 0; c < 3; ++c) {
                    CHECK(std::abs(y[s](i, c) - o[i][c]) <= 1e-10 * std::max(1.0, std::abs(o[i][c])));
                }
            }
        }
    }
}

TEST_CASE("isolated node is rejected") {
    SurrogateModel m(GnnConfig{4, 4, 1, true}, 1);
    GraphTopology t;
    t.nodes.resize(2);
    t.edges = {{0, 1, 0, 1}};
    Matrix ef(1, kEdgeFeatureDim);
    CHECK_THROWS_AS(m.forward(t, ef, std::vector<Matrix>{Matrix(2, kNodeFeatureDim)}), Error);
}

TEST_CASE("loss examples") {
    const std::vector<double> z0{0.0, 0.0, 0.0};
    Matrix target(3, 3);
    target(1, 0) = 2.0;
    Matrix pred = target;
    const std::vector<bool> fixed{true, false, false};
    CHECK(node_loss(pred, target, fixed, 1.0, z0) == 0.0);

    Matrix p1(1, 3, 1.0);
    Matrix t1(1, 3, 0.0);
    CHECK(node_loss(p1, t1, {false}, 1.0, z0) == 3.0);

    Matrix moved = pred;
    moved(0, 0) = 5.0;
    moved(0, 2) = -1.0;
    CHECK(node_loss(moved, target, fixed, 0.0, z0) == 0.0);
    CHECK(node_loss(moved, target, fixed, 1.0, z0) == 26.0);

    CHECK_THROWS_AS(node_loss(pred, target, {true, true, true}, 1.0, z0), Error);
    CHECK_THROWS_AS(node_loss(pred, Matrix(2, 3), fixed, 1.0, z0), Error);
}

TEST_CASE("fixed-node term is linear in lambda") {
    std::mt19937_64 rng(8);
    Matrix pred(6, 3);
    Matrix target(6, 3);
    randomise(pred, rng);
    randomise(target, rng);
    const std::vector<bool> fixed{true, false, false, true, false, false};
    const std::vector<double> z0{0.1, -0.2, 0.3};
    const double base = node_loss(pred, target, fixed, 0.0, z0);
    double prev = 0.0;
    for (double lambda : {0.0, 0.5, 1.0, 2.0, 10.0}) {
        const double term = node_loss(pred, target, fixed, lambda, z0) - base;
        CHECK(term >= prev - 1e-12);
        CHECK(term == doctest::Approx(lambda * (node_loss(pred, target, fixed, 1.0, z0) - base)));
        prev = term;
    }
}

TEST_CASE("gradients: surrogate against central differences") {
    const auto data = small_dataset(12, 5);
    for (bool self_term : {true, false}) {
        auto model = fresh_model(ModelKind::gnn, 6, data, 11);
        if (!self_term) {
            model.config.self_term = false;
            model.gnn = SurrogateModel(GnnConfig{6, 32, 3, false}, 11);
        }
        const std::vector<CaseRecord> batch(data.begin(), data.begin() + 4);
        CHECK(gradient_check(model, batch, 1e-5) < 1e-4);
    }
}

TEST_CASE("gradients: baseline against central differences") {
    const auto data = small_dataset(12, 6);
    auto model = fresh_model(ModelKind::nn, 64, data, 12);
    const std::vector<CaseRecord> batch(data.begin(), data.begin() + 5);
    CHECK(gradient_check(model, batch, 1e-5) < 1e-4);
}

TEST_CASE("zero output gradient gives zero parameter gradients") {
    const auto f = build_reference_frame();
    SurrogateModel m(GnnConfig{6, 8, 3, true}, 3);
    const auto g = assemble_features(f, {1e5, 1e5}, graph_from_frame(f));
    const std::vector<Matrix> xs{g.node_features};
    SurrogateModel::Tape tape;
    m.forward(g.topology, g.edge_features, xs, &tape);
    zero_grad(m.parameters());
    m.backward(g.topology, g.edge_features, xs, tape, std::vector<Matrix>{Matrix(6, 3)});
    for (const auto& p : m.parameters()) {
        for (double v : p.grad.values()) {
            CHECK(v == 0.0);
        }
    }
}

TEST_CASE("scaling the loss scales every gradient") {
    const auto f = build_reference_frame();
    std::mt19937_64 rng(4);
    SurrogateModel m(GnnConfig{6, 8, 3, true}, 3);
    auto g = assemble_features(f, {1e5, 1e5}, graph_from_frame(f));
    randomise(g.node_features, rng);
    randomise(g.edge_features, rng);
    const std::vector<Matrix> xs{g.node_features};
    SurrogateModel::Tape tape;
    const auto y = m.forward(g.topology, g.edge_features, xs, &tape);
    Matrix target(6, 3);
    randomise(target, rng);
    const std::vector<double> z0{0.0, 0.0, 0.0};
    Matrix g1;
    Matrix g3;
    node_loss(y[0], target, g.fixed_mask, 1.0, z0, &g1, 1.0);
    node_loss(y[0], target, g.fixed_mask, 1.0, z0, &g3, 3.0);
    zero_grad(m.parameters());
    m.backward(g.topology, g.edge_features, xs, tape, std::vector<Matrix>{g1});
    std::vector<Matrix> ref;
    for (const auto& p : m.parameters()) {
        ref.push_back(p.grad);
    }
    zero_grad(m.parameters());
    m.backward(g.topology, g.edge_features, xs, tape, std::vector<Matrix>{g3});
    for (std::size_t k = 0; k < ref.size(); ++k) {
        for (std::size_t i = 0; i < ref[k].size(); ++i) {
            CHECK(m.parameters()[k].grad.values()[i] ==
                  doctest::Approx(3.0 * ref[k].values()[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("adam") {
    SUBCASE("first step of a scalar") {
        std::vector<Parameter> ps{{"w", Matrix(1, 1, 0.5), Matrix(1, 1, 1.0)}};
        AdamState st;
        adam_step(ps, st, {});
        CHECK(ps[0].value(0, 0) - 0.5 == doctest::Approx(-0.001).epsilon(1e-6));
        CHECK(st.step == 1);
    }
    SUBCASE("zero gradients leave parameters unchanged") {
        std::vector<Parameter> ps{{"w", Matrix(2, 2, 0.7), Matrix(2, 2, 1.0)}};
        AdamState st;
        adam_step(ps, st, {});
        const Matrix after_one = ps[0].value;
        const double m1 = st.m[0][0];
        zero_grad(ps);
        adam_step(ps, st, {});
        // The first moment decays; the update is nonzero from momentum only.
        CHECK(std::abs(st.m[0][0]) < std::abs(m1));
        std::vector<Parameter> still{{"w", Matrix(2, 2, 0.7), Matrix(2, 2, 0.0)}};
        AdamState fresh;
        for (int i = 0; i < 5; ++i) {
            adam_step(still, fresh, {});
        }
        CHECK(still[0].value == Matrix(2, 2, 0.7));
        CHECK_FALSE(after_one == Matrix(2, 2, 0.7));
    }
    SUBCASE("deterministic") {
        auto run = [] {
            std::mt19937_64 rng(1);
            std::vector<Parameter> ps{{"w", Matrix(3, 3), Matrix(3, 3)}};
            randomise(ps[0].value, rng);
            AdamState st;
            for (int i = 0; i < 50; ++i) {
                randomise(ps[0].grad, rng);
                adam_step(ps, st, {});
            }
            return ps[0].value;
        };
        CHECK(run() == run());
    }
    SUBCASE("state mismatch") {
        std::vector<Parameter> ps{{"w", Matrix(1, 1), Matrix(1, 1)}};
        AdamState st;
        st.m.resize(3);
        st.v.resize(3);
        CHECK_THROWS_AS(adam_step(ps, st, {}), Error);
    }
}

TEST_CASE("edge order permutation leaves predictions unchanged") {
    const auto data = small_dataset(10, 2);
    const auto model = fresh_model(ModelKind::gnn, 16, data);
    const auto f = build_reference_frame();
    const auto g = assemble_features(f, data[3].loads(), graph_from_frame(f, 1));
    Matrix ef = g.edge_features;
    normalize_rows(ef, model.stats.edge);
    Matrix x = g.node_features;
    normalize_rows(x, model.stats.node);
    const auto base = model.gnn.forward(g.topology, ef, std::vector<Matrix>{x});

    std::mt19937_64 rng(17);
    std::vector<std::size_t> perm(g.topology.edge_count());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        perm[i] = i;
    }
    std::shuffle(perm.begin(), perm.end(), rng);
    GraphTopology t = g.topology;
    Matrix ef2(ef.rows(), ef.cols());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        t.edges[i] = g.topology.edges[perm[i]];
        std::copy(ef.row(perm[i]).begin(), ef.row(perm[i]).end(), ef2.row(i).begin());
    }
    const auto out = model.gnn.forward(t, ef2, std::vector<Matrix>{x});
    for (std::size_t i = 0; i < base[0].size(); ++i) {
        CHECK(std::abs(out[0].values()[i] - base[0].values()[i]) <= 1e-10);
    }
}

TEST_CASE("node relabelling permutes predictions") {
    const auto data = small_dataset(10, 2);
    const auto model = fresh_model(ModelKind::gnn, 16, data);
    const auto f = build_reference_frame();
    const auto g = assemble_features(f, data[1].loads(), graph_from_frame(f, 1));
    Matrix x = g.node_features;
    normalize_rows(x, model.stats.node);
    Matrix ef = g.edge_features;
    normalize_rows(ef, model.stats.edge);
    const auto base = model.gnn.forward(g.topology, ef, std::vector<Matrix>{x});

    const std::size_t n = g.node_count();
    std::vector<std::size_t> to_new(n);
    for (std::size_t i = 0; i < n; ++i) {
        to_new[i] = (i * 5 + 3) % n; // 5 is coprime with 12
    }
    GraphTopology t = g.topology;
    Matrix x2(n, kNodeFeatureDim);
    for (std::size_t i = 0; i < n; ++i) {
        t.nodes[to_new[i]] = g.topology.nodes[i];
        std::copy(x.row(i).begin(), x.row(i).end(), x2.row(to_new[i]).begin());
    }
    for (auto& e : t.edges) {
        e.source = to_new[e.source];
        e.target = to_new[e.target];
    }
    const auto out = model.gnn.forward(t, ef, std::vector<Matrix>{x2});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(std::abs(out[0](to_new[i], c) - base[0](i, c)) <= 1e-10);
        }
    }
}

TEST_CASE("zero-parameter models predict the training means") {
    const auto data = small_dataset(20, 3);
    const auto f = build_reference_frame();
    for (auto kind : {ModelKind::gnn, ModelKind::nn}) {
        auto model = fresh_model(kind, 8, data);
        for (auto& p : model.parameters()) {
            p.value.fill(0.0);
        }
        const auto r = model.predict(f, {3e5, 1e5});
        for (const auto& n : r) {
            CHECK(n.ux_mm == doctest::Approx(model.stats.target.mean[0]).epsilon(1e-12));
            CHECK(n.uy_mm == doctest::Approx(model.stats.target.mean[1]).epsilon(1e-12));
            CHECK(n.rz_deg == doctest::Approx(model.stats.target.mean[2]).epsilon(1e-12));
        }
    }
}

TEST_CASE("prediction is deterministic and batch independent") {
    const auto data = small_dataset(20, 3);
    const auto f = build_reference_frame();
    const auto model = fresh_model(ModelKind::gnn, 16, data);
    const std::vector<LoadCase> loads{{1e5, 2e5}, {6e5, 3e5}, {9e4, 9e4}};
    const auto a = model.predict(f, loads);
    const auto b = model.predict(f, loads);
    for (std::size_t s = 0; s < loads.size(); ++s) {
        const auto single = model.predict(f, loads[s]);
        for (std::size_t k = 0; k < 6; ++k) {
            CHECK(a[s][k].ux_mm == b[s][k].ux_mm);
            CHECK(a[s][k].ux_mm == single[k].ux_mm);
            CHECK(a[s][k].rz_deg == single[k].rz_deg);
        }
    }
}

TEST_CASE("checkpoint round trip is bitwise") {
    const auto data = small_dataset(30, 4);
    const auto f = build_reference_frame();
    for (auto kind : {ModelKind::gnn, ModelKind::nn}) {
        TrainConfig cfg;
        cfg.kind = kind;
        cfg.hidden_dim = 8;
        cfg.max_epochs = 2;
        cfg.seed = 9;
        const auto [tr, te] = split_dataset(data, 0.8, 9);
        const auto model = train(f, tr, te, cfg);
        const auto text = checkpoint_to_json(model);
        const auto back = checkpoint_from_json(text);
        CHECK(checkpoint_to_json(back) == text);
        CHECK(back.kind == kind);
        CHECK(back.history.epochs.size() == 2);
        for (auto lc : {LoadCase{1e5, 1e5}, LoadCase{7e5, 4e5}}) {
            const auto p = model.predict(f, lc);
            const auto q = back.predict(f, lc);
            for (std::size_t k = 0; k < 6; ++k) {
                CHECK(p[k].ux_mm == q[k].ux_mm);
                CHECK(p[k].uy_mm == q[k].uy_mm);
                CHECK(p[k].rz_deg == q[k].rz_deg);
            }
        }
    }
}

TEST_CASE("checkpoint rejection") {
    auto kind_of = [](const std::string& text) {
        try {
            checkpoint_from_json(text);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::io;
    };
    CHECK(kind_of("{") == ErrorKind::parse);
    CHECK(kind_of(R"({"schema_version": 7})") == ErrorKind::version);
    CHECK(kind_of(R"({"schema_version": 1})") == ErrorKind::schema);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.json"), Error);
}

TEST_CASE("training: loss falls and batching boundary") {
    const auto f = build_reference_frame();
    DatasetConfig dc;
    dc.seed = 7;
    const auto data = generate_dataset(f, dc);
    const auto [tr, te] = split_dataset(data, 0.85, 7);
    TrainConfig cfg;
    cfg.seed = 7;
    cfg.max_epochs = 20;
    const auto model = train(f, tr, te, cfg);
    REQUIRE(model.history.epochs.size() == 20);
    CHECK(model.history.epochs[19].train_loss < model.history.epochs[0].train_loss);
    CHECK(model.history.epochs[0].optimizer_steps == (425 + 31) / 32);
    CHECK(model.history.best_epoch >= 1);
    CHECK(model.history.best_epoch <= 20);
    double best = INFINITY;
    for (const auto& e : model.history.epochs) {
        best = std::min(best, e.test_loss);
    }
    CHECK(model.history.epochs[static_cast<std::size_t>(model.history.best_epoch - 1)].test_loss == best);
    CHECK(dataset_loss(model, f, te) == doctest::Approx(best).epsilon(1e-12));

    TrainConfig big = cfg;
    big.kind = ModelKind::nn;
    big.max_epochs = 3;
    big.batch_size = 1000;
    const auto nn = train(f, tr, te, big);
    for (const auto& e : nn.history.epochs) {
        CHECK(e.optimizer_steps == 1);
    }
}

TEST_CASE("training: config checks and divergence") {
    const auto f = build_reference_frame();
    const auto data = small_dataset(20, 8);
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(train(f, data, {}, cfg), Error);
    cfg = {};
    cfg.lambda = -1.0;
    CHECK_THROWS_AS(train(f, data, {}, cfg), Error);
    CHECK_THROWS_AS(train(f, {}, data, TrainConfig{}), Error);

    cfg = {};
    cfg.kind = ModelKind::nn;
    cfg.learning_rate = 1e200;
    cfg.max_epochs = 5;
    try {
        train(f, data, {}, cfg);
        FAIL("expected divergence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::diverged);
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}
