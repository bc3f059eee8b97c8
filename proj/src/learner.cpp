#include "framelab/learner.hpp"

#include "framelab/error.hpp"
#include "framelab/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace framelab {

namespace {

double relu(double v) {
    return v > 0.0 ? v : 0.0;
}

Parameter make_param(std::string name, std::size_t rows, std::size_t cols) {
    return {std::move(name), Matrix(rows, cols), Matrix(rows, cols)};
}

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void check_in_degree(const GraphTopology& topo, std::vector<double>& inv_degree) {
    inv_degree.assign(topo.node_count(), 0.0);
    for (const auto& e : topo.edges) {
        inv_degree[e.target] += 1.0;
    }
    for (std::size_t i = 0; i < inv_degree.size(); ++i) {
        if (inv_degree[i] == 0.0) {
            fail(ErrorKind::invalid_argument,
                 "model_forward: node " + std::to_string(i) + " has no incoming edge");
        }
        inv_degree[i] = 1.0 / inv_degree[i];
    }
}

// Normalised training inputs shared by every batch of one frame.
struct Prepared {
    GraphTopology topology;
    Matrix edge_features;
    std::vector<Matrix> node_features;
    std::vector<Matrix> targets; // nf x 3
    Matrix loads;                // N x 2
    std::vector<bool> fixed;     // nf
    std::vector<double> zero_point;
    std::size_t frame_nodes = 0;
};

Prepared prepare(const TrainedModel& model, const Frame& frame,
                 const std::vector<CaseRecord>& records) {
    Prepared p;
    p.frame_nodes = frame.nodes.size();
    p.topology = graph_from_frame(frame, model.config.refinement_level);
    const auto base = assemble_features(frame, LoadCase{}, p.topology);
    p.edge_features = base.edge_features;
    normalize_rows(p.edge_features, model.stats.edge);
    p.fixed.assign(base.fixed_mask.begin(),
                   base.fixed_mask.begin() + static_cast<std::ptrdiff_t>(p.frame_nodes));
    for (std::size_t c = 0; c < kTargetDim; ++c) {
        p.zero_point.push_back(-model.stats.target.mean[c] / model.stats.target.std[c]);
    }
    p.loads = Matrix(records.size(), 2);
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.targets.size() != p.frame_nodes) {
            fail(ErrorKind::invalid_argument, "record " + std::to_string(rec.case_id) +
                                                  " does not match the frame's node count");
        }
        auto g = assemble_features(frame, rec.loads(), p.topology);
        normalize_rows(g.node_features, model.stats.node);
        p.node_features.push_back(std::move(g.node_features));
        Matrix t = response_matrix(rec.targets);
        normalize_rows(t, model.stats.target);
        p.targets.push_back(std::move(t));
        p.loads(r, 0) = rec.f_mid;
        p.loads(r, 1) = rec.f_top;
    }
    normalize_rows(p.loads, model.stats.load);
    return p;
}

Matrix head_rows(const Matrix& m, std::size_t rows) {
    Matrix out(rows, m.cols());
    std::copy(m.data(), m.data() + rows * m.cols(), out.data());
    return out;
}

// Mean loss over the selected samples; gradients of that mean are
// accumulated when requested.
double run_batch(TrainedModel& model, const Prepared& p, std::span<const std::size_t> idx,
                 bool grads) {
    const double inv_b = 1.0 / static_cast<double>(idx.size());
    const double lambda = model.config.lambda;
    double total = 0.0;

    if (model.kind == ModelKind::gnn) {
        std::vector<Matrix> inputs;
        inputs.reserve(idx.size());
        for (auto k : idx) {
            inputs.push_back(p.node_features[k]);
        }
        SurrogateModel::Tape tape;
        const auto out = model.gnn.forward(p.topology, p.edge_features, inputs, grads ? &tape : nullptr);
        std::vector<Matrix> dout;
        for (std::size_t s = 0; s < idx.size(); ++s) {
            const Matrix pred = head_rows(out[s], p.frame_nodes);
            Matrix g;
            total += node_loss(pred, p.targets[idx[s]], p.fixed, lambda, p.zero_point,
                               grads ? &g : nullptr, inv_b);
            if (grads) {
                Matrix full(out[s].rows(), out[s].cols());
                std::copy(g.data(), g.data() + g.size(), full.data());
                dout.push_back(std::move(full));
            }
        }
        if (grads) {
            model.gnn.backward(p.topology, p.edge_features, inputs, tape, dout);
        }
    } else {
        Matrix x(idx.size(), 2);
        for (std::size_t s = 0; s < idx.size(); ++s) {
            x(s, 0) = p.loads(idx[s], 0);
            x(s, 1) = p.loads(idx[s], 1);
        }
        BaselineModel::Tape tape;
        const Matrix out = model.nn.forward(x, grads ? &tape : nullptr);
        Matrix dout(out.rows(), out.cols());
        for (std::size_t s = 0; s < idx.size(); ++s) {
            Matrix pred(p.frame_nodes, kTargetDim);
            std::copy(out.row(s).begin(), out.row(s).end(), pred.data());
            Matrix g;
            total += node_loss(pred, p.targets[idx[s]], p.fixed, lambda, p.zero_point,
                               grads ? &g : nullptr, inv_b);
            if (grads) {
                std::copy(g.data(), g.data() + g.size(), dout.row(s).begin());
            }
        }
        if (grads) {
            model.nn.backward(x, tape, dout);
        }
    }
    return total * inv_b;
}

} // namespace

const char* to_string(ModelKind kind) {
    return kind == ModelKind::gnn ? "gnn" : "nn";
}

ModelKind parse_model_kind(std::string_view text) {
    if (text == "gnn") {
        return ModelKind::gnn;
    }
    if (text == "nn") {
        return ModelKind::nn;
    }
    fail(ErrorKind::invalid_argument, "unknown model kind '" + std::string(text) + "'");
}

void init_uniform_fan_in(std::vector<Parameter>& params, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::size_t last_fan_in = 1;
    for (auto& p : params) {
        // Biases (column vectors) share the fan-in of the preceding weight.
        const bool is_bias = p.value.cols() == 1;
        const std::size_t fan_in = is_bias ? last_fan_in : p.value.cols();
        if (!is_bias) {
            last_fan_in = fan_in;
        }
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& v : p.value.values()) {
            v = bound * (2.0 * unit_uniform(rng) - 1.0);
        }
    }
}

void zero_grad(std::vector<Parameter>& params) {
    for (auto& p : params) {
        p.grad.fill(0.0);
    }
}

std::size_t parameter_count(const std::vector<Parameter>& params) {
    std::size_t n = 0;
    for (const auto& p : params) {
        n += p.value.size();
    }
    return n;
}

// ---------------------------------------------------------------------------
// SurrogateModel

SurrogateModel::SurrogateModel(const GnnConfig& config, std::uint64_t seed) : config_(config) {
    if (config.hidden_dim == 0 || config.edge_hidden == 0 || config.layer_count == 0) {
        fail(ErrorKind::invalid_argument, "SurrogateModel: dimensions must be positive");
    }
    const std::size_t d = config.hidden_dim;
    auto add = [this](std::string name, std::size_t r, std::size_t c) {
        params_.push_back(make_param(std::move(name), r, c));
        return params_.size() - 1;
    };
    input_ = add("input.weight", d, kNodeFeatureDim);
    for (std::size_t k = 0; k < config.layer_count; ++k) {
        const std::string pre = "conv" + std::to_string(k) + ".";
        LayerIndex li{};
        li.edge_w1 = add(pre + "edge_net.0.weight", config.edge_hidden, kEdgeFeatureDim);
        li.edge_b1 = add(pre + "edge_net.0.bias", config.edge_hidden, 1);
        li.edge_w2 = add(pre + "edge_net.2.weight", d * d, config.edge_hidden);
        li.edge_b2 = add(pre + "edge_net.2.bias", d * d, 1);
        if (config.self_term) {
            li.root = add(pre + "root.weight", d, d);
            li.bias = add(pre + "bias", d, 1);
        }
        layers_.push_back(li);
    }
    dec_w1_ = add("decoder.0.weight", d, d);
    dec_b1_ = add("decoder.0.bias", d, 1);
    dec_w2_ = add("decoder.2.weight", kTargetDim, d);
    dec_b2_ = add("decoder.2.bias", kTargetDim, 1);
    init_uniform_fan_in(params_, seed);
}

std::vector<Matrix> SurrogateModel::forward(const GraphTopology& topo, const Matrix& edge_features,
                                            std::span<const Matrix> node_features,
                                            Tape* tape) const {
    const std::size_t d = config_.hidden_dim;
    const std::size_t eh = config_.edge_hidden;
    const std::size_t n = topo.node_count();
    const std::size_t ne = topo.edge_count();
    const std::size_t nl = config_.layer_count;
    if (edge_features.rows() != ne || edge_features.cols() != kEdgeFeatureDim) {
        fail(ErrorKind::invalid_argument, "model_forward: edge feature shape mismatch");
    }
    for (const auto& x : node_features) {
        if (x.rows() != n || x.cols() != kNodeFeatureDim) {
            fail(ErrorKind::invalid_argument, "model_forward: node feature shape mismatch");
        }
    }
    std::vector<double> inv_deg;
    check_in_degree(topo, inv_deg);

    // Edge-conditioned weight matrices depend only on edge features, so they
    // are shared across the batch.
    std::vector<Matrix> edge_pre(nl, Matrix(ne, eh));
    std::vector<Matrix> edge_w(nl, Matrix(ne, d * d));
    std::vector<double> act(eh);
    for (std::size_t k = 0; k < nl; ++k) {
        const auto& li = layers_[k];
        const auto& w1 = params_[li.edge_w1].value;
        const auto& b1 = params_[li.edge_b1].value;
        const auto& w2 = params_[li.edge_w2].value;
        const auto& b2 = params_[li.edge_b2].value;
        for (std::size_t e = 0; e < ne; ++e) {
            double* z = edge_pre[k].row(e).data();
            matvec(w1.data(), eh, kEdgeFeatureDim, edge_features.row(e).data(), z, false);
            for (std::size_t a = 0; a < eh; ++a) {
                z[a] += b1.values()[a];
                act[a] = relu(z[a]);
            }
            double* w = edge_w[k].row(e).data();
            matvec(w2.data(), d * d, eh, act.data(), w, false);
            for (std::size_t a = 0; a < d * d; ++a) {
                w[a] += b2.values()[a];
            }
        }
    }

    const std::size_t batch = node_features.size();
    std::vector<Matrix> out;
    out.reserve(batch);
    if (tape) {
        tape->hidden.assign(batch, {});
        tape->pre.assign(batch, {});
        tape->decoder_pre.assign(batch, Matrix());
    }
    const auto& w_in = params_[input_].value;
    for (std::size_t s = 0; s < batch; ++s) {
        const Matrix& x = node_features[s];
        Matrix h(n, d);
        for (std::size_t i = 0; i < n; ++i) {
            matvec(w_in.data(), d, kNodeFeatureDim, x.row(i).data(), h.row(i).data(), false);
        }
        if (tape) {
            tape->hidden[s].push_back(h);
        }
        for (std::size_t k = 0; k < nl; ++k) {
            const auto& li = layers_[k];
            Matrix pre(n, d);
            Matrix msg(1, d);
            for (std::size_t e = 0; e < ne; ++e) {
                const auto& edge = topo.edges[e];
                matvec(edge_w[k].row(e).data(), d, d, h.row(edge.source).data(), msg.data(), false);
                double* p = pre.row(edge.target).data();
                const double scale = inv_deg[edge.target];
                for (std::size_t a = 0; a < d; ++a) {
                    p[a] += scale * msg.values()[a];
                }
            }
            if (config_.self_term) {
                const auto& root = params_[li.root].value;
                const auto& bias = params_[li.bias].value;
                for (std::size_t i = 0; i < n; ++i) {
                    matvec(root.data(), d, d, h.row(i).data(), pre.row(i).data(), true);
                    for (std::size_t a = 0; a < d; ++a) {
                        pre(i, a) += bias.values()[a];
                    }
                }
            }
            Matrix next(n, d);
            for (std::size_t a = 0; a < pre.size(); ++a) {
                next.values()[a] = relu(pre.values()[a]);
            }
            if (tape) {
                tape->pre[s].push_back(std::move(pre));
                tape->hidden[s].push_back(next);
            }
            h = std::move(next);
        }

        const auto& dw1 = params_[dec_w1_].value;
        const auto& db1 = params_[dec_b1_].value;
        const auto& dw2 = params_[dec_w2_].value;
        const auto& db2 = params_[dec_b2_].value;
        Matrix dpre(n, d);
        Matrix y(n, kTargetDim);
        std::vector<double> q(d);
        for (std::size_t i = 0; i < n; ++i) {
            double* z = dpre.row(i).data();
            matvec(dw1.data(), d, d, h.row(i).data(), z, false);
            for (std::size_t a = 0; a < d; ++a) {
                z[a] += db1.values()[a];
                q[a] = relu(z[a]);
            }
            matvec(dw2.data(), kTargetDim, d, q.data(), y.row(i).data(), false);
            for (std::size_t c = 0; c < kTargetDim; ++c) {
                y(i, c) += db2.values()[c];
            }
        }
        if (tape) {
            tape->decoder_pre[s] = std::move(dpre);
        }
        out.push_back(std::move(y));
    }
    if (tape) {
        tape->edge_pre = std::move(edge_pre);
        tape->edge_weight = std::move(edge_w);
    }
    return out;
}

void SurrogateModel::backward(const GraphTopology& topo, const Matrix& edge_features,
                              std::span<const Matrix> node_features, const Tape& tape,
                              std::span<const Matrix> output_grads) {
    const std::size_t d = config_.hidden_dim;
    const std::size_t eh = config_.edge_hidden;
    const std::size_t n = topo.node_count();
    const std::size_t ne = topo.edge_count();
    const std::size_t nl = config_.layer_count;
    const std::size_t batch = node_features.size();
    if (output_grads.size() != batch || tape.hidden.size() != batch) {
        fail(ErrorKind::invalid_argument, "backward: batch size mismatch");
    }
    std::vector<double> inv_deg;
    check_in_degree(topo, inv_deg);

    // dLoss/dW_k(e), summed over the batch before the edge network backward.
    std::vector<Matrix> d_edge_w(nl, Matrix(ne, d * d));

    auto& g_dw1 = params_[dec_w1_].grad;
    auto& g_db1 = params_[dec_b1_].grad;
    auto& g_dw2 = params_[dec_w2_].grad;
    auto& g_db2 = params_[dec_b2_].grad;
    const auto& dw1 = params_[dec_w1_].value;
    const auto& dw2 = params_[dec_w2_].value;

    std::vector<double> q(d);
    std::vector<double> dq(d);
    for (std::size_t s = 0; s < batch; ++s) {
        const Matrix& dy = output_grads[s];
        const Matrix& h_last = tape.hidden[s][nl];
        const Matrix& zpre = tape.decoder_pre[s];
        Matrix dh(n, d);
        for (std::size_t i = 0; i < n; ++i) {
            const double* g = dy.row(i).data();
            if (g[0] == 0.0 && g[1] == 0.0 && g[2] == 0.0) {
                continue;
            }
            for (std::size_t a = 0; a < d; ++a) {
                q[a] = relu(zpre(i, a));
            }
            outer_acc(g_dw2.data(), kTargetDim, d, g, q.data());
            for (std::size_t c = 0; c < kTargetDim; ++c) {
                g_db2.values()[c] += g[c];
            }
            std::fill(dq.begin(), dq.end(), 0.0);
            matvec_t_acc(dw2.data(), kTargetDim, d, g, dq.data());
            for (std::size_t a = 0; a < d; ++a) {
                dq[a] = zpre(i, a) > 0.0 ? dq[a] : 0.0;
                g_db1.values()[a] += dq[a];
            }
            outer_acc(g_dw1.data(), d, d, dq.data(), h_last.row(i).data());
            matvec_t_acc(dw1.data(), d, d, dq.data(), dh.row(i).data());
        }

        for (std::size_t kk = nl; kk-- > 0;) {
            const auto& li = layers_[kk];
            const Matrix& pre = tape.pre[s][kk];
            const Matrix& h_prev = tape.hidden[s][kk];
            Matrix dpre(n, d);
            for (std::size_t a = 0; a < dpre.size(); ++a) {
                dpre.values()[a] = pre.values()[a] > 0.0 ? dh.values()[a] : 0.0;
            }
            Matrix dprev(n, d);
            if (config_.self_term) {
                auto& g_root = params_[li.root].grad;
                auto& g_bias = params_[li.bias].grad;
                const auto& root = params_[li.root].value;
                for (std::size_t i = 0; i < n; ++i) {
                    const double* g = dpre.row(i).data();
                    for (std::size_t a = 0; a < d; ++a) {
                        g_bias.values()[a] += g[a];
                    }
                    outer_acc(g_root.data(), d, d, g, h_prev.row(i).data());
                    matvec_t_acc(root.data(), d, d, g, dprev.row(i).data());
                }
            }
            std::vector<double> g(d);
            for (std::size_t e = 0; e < ne; ++e) {
                const auto& edge = topo.edges[e];
                const double scale = inv_deg[edge.target];
                for (std::size_t a = 0; a < d; ++a) {
                    g[a] = scale * dpre(edge.target, a);
                }
                outer_acc(d_edge_w[kk].row(e).data(), d, d, g.data(), h_prev.row(edge.source).data());
                matvec_t_acc(tape.edge_weight[kk].row(e).data(), d, d, g.data(),
                             dprev.row(edge.source).data());
            }
            dh = std::move(dprev);
        }

        auto& g_in = params_[input_].grad;
        const Matrix& x = node_features[s];
        for (std::size_t i = 0; i < n; ++i) {
            outer_acc(g_in.data(), d, kNodeFeatureDim, dh.row(i).data(), x.row(i).data());
        }
    }

    std::vector<double> act(eh);
    std::vector<double> dact(eh);
    for (std::size_t k = 0; k < nl; ++k) {
        const auto& li = layers_[k];
        auto& g_w1 = params_[li.edge_w1].grad;
        auto& g_b1 = params_[li.edge_b1].grad;
        auto& g_w2 = params_[li.edge_w2].grad;
        auto& g_b2 = params_[li.edge_b2].grad;
        const auto& w2 = params_[li.edge_w2].value;
        for (std::size_t e = 0; e < ne; ++e) {
            const double* dw = d_edge_w[k].row(e).data();
            const double* z = tape.edge_pre[k].row(e).data();
            for (std::size_t a = 0; a < eh; ++a) {
                act[a] = relu(z[a]);
            }
            outer_acc(g_w2.data(), d * d, eh, dw, act.data());
            for (std::size_t a = 0; a < d * d; ++a) {
                g_b2.values()[a] += dw[a];
            }
            std::fill(dact.begin(), dact.end(), 0.0);
            matvec_t_acc(w2.data(), d * d, eh, dw, dact.data());
            for (std::size_t a = 0; a < eh; ++a) {
                dact[a] = z[a] > 0.0 ? dact[a] : 0.0;
                g_b1.values()[a] += dact[a];
            }
            outer_acc(g_w1.data(), eh, kEdgeFeatureDim, dact.data(), edge_features.row(e).data());
        }
    }
}

// ---------------------------------------------------------------------------
// BaselineModel

BaselineModel::BaselineModel(std::size_t hidden_dim, std::size_t output_dim, std::uint64_t seed)
    : hidden_(hidden_dim), output_(output_dim) {
    params_.push_back(make_param("dense.0.weight", hidden_, kInputDim));
    params_.push_back(make_param("dense.0.bias", hidden_, 1));
    params_.push_back(make_param("dense.1.weight", hidden_, hidden_));
    params_.push_back(make_param("dense.1.bias", hidden_, 1));
    params_.push_back(make_param("dense.2.weight", output_, hidden_));
    params_.push_back(make_param("dense.2.bias", output_, 1));
    init_uniform_fan_in(params_, seed);
}

Matrix BaselineModel::forward(const Matrix& inputs, Tape* tape) const {
    if (inputs.cols() != kInputDim) {
        fail(ErrorKind::invalid_argument, "baseline forward: expected two inputs per sample");
    }
    const std::size_t b = inputs.rows();
    Matrix pre1(b, hidden_);
    Matrix pre2(b, hidden_);
    Matrix out(b, output_);
    std::vector<double> a1(hidden_);
    std::vector<double> a2(hidden_);
    for (std::size_t s = 0; s < b; ++s) {
        matvec(params_[0].value.data(), hidden_, kInputDim, inputs.row(s).data(), pre1.row(s).data(), false);
        for (std::size_t a = 0; a < hidden_; ++a) {
            pre1(s, a) += params_[1].value.values()[a];
            a1[a] = relu(pre1(s, a));
        }
        matvec(params_[2].value.data(), hidden_, hidden_, a1.data(), pre2.row(s).data(), false);
        for (std::size_t a = 0; a < hidden_; ++a) {
            pre2(s, a) += params_[3].value.values()[a];
            a2[a] = relu(pre2(s, a));
        }
        matvec(params_[4].value.data(), output_, hidden_, a2.data(), out.row(s).data(), false);
        for (std::size_t c = 0; c < output_; ++c) {
            out(s, c) += params_[5].value.values()[c];
        }
    }
    if (tape) {
        tape->pre1 = std::move(pre1);
        tape->pre2 = std::move(pre2);
    }
    return out;
}

void BaselineModel::backward(const Matrix& inputs, const Tape& tape, const Matrix& output_grads) {
    const std::size_t b = inputs.rows();
    std::vector<double> a1(hidden_);
    std::vector<double> a2(hidden_);
    std::vector<double> d2(hidden_);
    std::vector<double> d1(hidden_);
    for (std::size_t s = 0; s < b; ++s) {
        for (std::size_t a = 0; a < hidden_; ++a) {
            a1[a] = relu(tape.pre1(s, a));
            a2[a] = relu(tape.pre2(s, a));
        }
        const double* g = output_grads.row(s).data();
        outer_acc(params_[4].grad.data(), output_, hidden_, g, a2.data());
        for (std::size_t c = 0; c < output_; ++c) {
            params_[5].grad.values()[c] += g[c];
        }
        std::fill(d2.begin(), d2.end(), 0.0);
        matvec_t_acc(params_[4].value.data(), output_, hidden_, g, d2.data());
        for (std::size_t a = 0; a < hidden_; ++a) {
            d2[a] = tape.pre2(s, a) > 0.0 ? d2[a] : 0.0;
            params_[3].grad.values()[a] += d2[a];
        }
        outer_acc(params_[2].grad.data(), hidden_, hidden_, d2.data(), a1.data());
        std::fill(d1.begin(), d1.end(), 0.0);
        matvec_t_acc(params_[2].value.data(), hidden_, hidden_, d2.data(), d1.data());
        for (std::size_t a = 0; a < hidden_; ++a) {
            d1[a] = tape.pre1(s, a) > 0.0 ? d1[a] : 0.0;
            params_[1].grad.values()[a] += d1[a];
        }
        outer_acc(params_[0].grad.data(), hidden_, kInputDim, d1.data(), inputs.row(s).data());
    }
}

// ---------------------------------------------------------------------------
// Loss and optimiser

double node_loss(const Matrix& pred, const Matrix& target, const std::vector<bool>& fixed,
                 double lambda, std::span<const double> zero_point, Matrix* grad,
                 double grad_scale) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols() ||
        fixed.size() != pred.rows() || zero_point.size() != pred.cols()) {
        fail(ErrorKind::invalid_argument, "loss: shape mismatch");
    }
    const auto n_fixed = static_cast<std::size_t>(std::count(fixed.begin(), fixed.end(), true));
    const std::size_t n_free = fixed.size() - n_fixed;
    if (n_free == 0) {
        fail(ErrorKind::invalid_argument, "loss: no free nodes");
    }
    if (grad) {
        *grad = Matrix(pred.rows(), pred.cols());
    }
    double free_sum = 0.0;
    double fixed_sum = 0.0;
    for (std::size_t i = 0; i < pred.rows(); ++i) {
        for (std::size_t c = 0; c < pred.cols(); ++c) {
            if (fixed[i]) {
                const double r = pred(i, c) - zero_point[c];
                fixed_sum += r * r;
                if (grad) {
                    (*grad)(i, c) = grad_scale * 2.0 * lambda * r / static_cast<double>(n_fixed);
                }
            } else {
                const double r = pred(i, c) - target(i, c);
                free_sum += r * r;
                if (grad) {
                    (*grad)(i, c) = grad_scale * 2.0 * r / static_cast<double>(n_free);
                }
            }
        }
    }
    double loss = free_sum / static_cast<double>(n_free);
    if (n_fixed > 0) {
        loss += lambda * fixed_sum / static_cast<double>(n_fixed);
    }
    return loss;
}

void adam_step(std::vector<Parameter>& params, AdamState& state, const AdamConfig& config) {
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(p.value.size(), 0.0);
            state.v.emplace_back(p.value.size(), 0.0);
        }
    }
    if (state.m.size() != params.size()) {
        fail(ErrorKind::invalid_argument, "adam_step: optimizer state does not match parameters");
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& value = params[k].value.values();
        const auto& grad = params[k].grad.values();
        auto& m = state.m[k];
        auto& v = state.v[k];
        if (m.size() != value.size()) {
            fail(ErrorKind::invalid_argument, "adam_step: optimizer state does not match parameters");
        }
        for (std::size_t a = 0; a < value.size(); ++a) {
            m[a] = config.beta1 * m[a] + (1.0 - config.beta1) * grad[a];
            v[a] = config.beta2 * v[a] + (1.0 - config.beta2) * grad[a] * grad[a];
            const double mhat = m[a] / bc1;
            const double vhat = v[a] / bc2;
            value[a] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
        }
    }
}

// ---------------------------------------------------------------------------
// TrainedModel

std::vector<Parameter>& TrainedModel::parameters() {
    return kind == ModelKind::gnn ? gnn.parameters() : nn.parameters();
}

const std::vector<Parameter>& TrainedModel::parameters() const {
    return kind == ModelKind::gnn ? gnn.parameters() : nn.parameters();
}

ResponseField TrainedModel::predict(const Frame& frame, const LoadCase& loads) const {
    return predict(frame, std::span<const LoadCase>(&loads, 1)).front();
}

std::vector<ResponseField> TrainedModel::predict(const Frame& frame,
                                                 std::span<const LoadCase> loads) const {
    const std::size_t nf = frame.nodes.size();
    std::vector<ResponseField> out;
    out.reserve(loads.size());
    if (loads.empty()) {
        return out;
    }
    if (kind == ModelKind::gnn) {
        const auto topo = graph_from_frame(frame, config.refinement_level);
        Matrix edges;
        std::vector<Matrix> inputs;
        for (const auto& l : loads) {
            auto g = assemble_features(frame, l, topo);
            if (inputs.empty()) {
                edges = std::move(g.edge_features);
                normalize_rows(edges, stats.edge);
            }
            normalize_rows(g.node_features, stats.node);
            inputs.push_back(std::move(g.node_features));
        }
        const auto y = gnn.forward(topo, edges, inputs);
        for (const auto& m : y) {
            Matrix head = head_rows(m, nf);
            denormalize_rows(head, stats.target);
            out.push_back(response_from_matrix(head));
        }
    } else {
        if (nn.output_dim() != nf * kTargetDim) {
            fail(ErrorKind::invalid_argument, "baseline output size does not match frame");
        }
        Matrix x(loads.size(), 2);
        for (std::size_t s = 0; s < loads.size(); ++s) {
            x(s, 0) = loads[s].f_mid;
            x(s, 1) = loads[s].f_top;
        }
        normalize_rows(x, stats.load);
        const Matrix y = nn.forward(x);
        for (std::size_t s = 0; s < loads.size(); ++s) {
            Matrix m(nf, kTargetDim);
            std::copy(y.row(s).begin(), y.row(s).end(), m.data());
            denormalize_rows(m, stats.target);
            out.push_back(response_from_matrix(m));
        }
    }
    return out;
}

TrainedModel make_model(const TrainConfig& config, const NormStats& stats, std::size_t frame_nodes) {
    TrainedModel m;
    m.kind = config.kind;
    m.config = config;
    m.stats = stats;
    if (config.kind == ModelKind::gnn) {
        GnnConfig g;
        g.hidden_dim = config.hidden_dim;
        g.self_term = config.self_term;
        m.gnn = SurrogateModel(g, config.seed);
    } else {
        m.nn = BaselineModel(config.hidden_dim, frame_nodes * kTargetDim, config.seed);
    }
    return m;
}

double dataset_loss(const TrainedModel& model, const Frame& frame,
                    const std::vector<CaseRecord>& records) {
    if (records.empty()) {
        return 0.0;
    }
    const auto p = prepare(model, frame, records);
    std::vector<std::size_t> idx(records.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        idx[k] = k;
    }
    // run_batch only mutates the model when gradients are requested.
    return run_batch(const_cast<TrainedModel&>(model), p, idx, false);
}

double batch_loss(TrainedModel& model, const Frame& frame, const std::vector<CaseRecord>& records,
                  bool accumulate_grads) {
    const auto p = prepare(model, frame, records);
    std::vector<std::size_t> idx(records.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        idx[k] = k;
    }
    return run_batch(model, p, idx, accumulate_grads);
}

TrainedModel train(const Frame& frame, const std::vector<CaseRecord>& training,
                   const std::vector<CaseRecord>& testing, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
    if (training.empty()) {
        fail(ErrorKind::invalid_argument, "train: empty training split");
    }
    if (!(config.learning_rate > 0.0) || !(config.lambda >= 0.0) || config.batch_size == 0 ||
        config.max_epochs < 1) {
        fail(ErrorKind::invalid_argument,
             "train: need learning rate > 0, lambda >= 0, batch size >= 1 and epochs >= 1");
    }
    const NormStats stats = fit_normalizer(frame, training, config.refinement_level);
    TrainedModel model = make_model(config, stats, frame.nodes.size());

    const Prepared train_data = prepare(model, frame, training);
    const bool has_test = !testing.empty();
    const Prepared test_data = has_test ? prepare(model, frame, testing) : Prepared{};
    const auto profile = zone_profile();

    AdamConfig adam{config.learning_rate, config.beta1, config.beta2, config.epsilon};
    AdamState state;
    std::mt19937_64 rng(config.seed ^ 0x5851f42d4c957f2dULL);

    std::vector<std::size_t> order(training.size());
    std::vector<std::size_t> all_test(testing.size());
    for (std::size_t k = 0; k < all_test.size(); ++k) {
        all_test[k] = k;
    }
    std::vector<Parameter> best = model.parameters();
    double best_loss = std::numeric_limits<double>::infinity();

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        for (std::size_t k = 0; k < order.size(); ++k) {
            order[k] = k;
        }
        for (std::size_t k = order.size(); k > 1; --k) {
            const auto j = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(k));
            std::swap(order[k - 1], order[j]);
        }

        EpochStats es;
        es.epoch = epoch;
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, stop - start);
            zero_grad(model.parameters());
            const double l = run_batch(model, train_data, idx, true);
            if (!std::isfinite(l)) {
                fail(ErrorKind::diverged, "training diverged (non-finite loss) at epoch " +
                                              std::to_string(epoch));
            }
            loss_sum += l * static_cast<double>(idx.size());
            adam_step(model.parameters(), state, adam);
            ++es.optimizer_steps;
        }
        es.train_loss = loss_sum / static_cast<double>(order.size());

        double selection_loss = es.train_loss;
        if (has_test) {
            es.test_loss = run_batch(model, test_data, all_test, false);
            if (!std::isfinite(es.test_loss)) {
                fail(ErrorKind::diverged, "training diverged (non-finite test loss) at epoch " +
                                              std::to_string(epoch));
            }
            std::vector<LoadCase> loads;
            for (const auto& r : testing) {
                loads.push_back(r.loads());
            }
            const auto preds = model.predict(frame, loads);
            es.test_accuracy = evaluate_predictions(testing, preds, profile, "testing").overall.overall;
            selection_loss = es.test_loss;
        }
        if (selection_loss < best_loss) {
            best_loss = selection_loss;
            best = model.parameters();
            model.history.best_epoch = epoch;
        }
        model.history.epochs.push_back(es);
        if (on_epoch) {
            on_epoch(es);
        }
    }
    model.parameters() = std::move(best);
    return model;
}

} // namespace framelab
