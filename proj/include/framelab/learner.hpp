#ifndef FRAMELAB_LEARNER_HPP
#define FRAMELAB_LEARNER_HPP

#include "framelab/dataset.hpp"
#include "framelab/graph.hpp"
#include "framelab/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace framelab {

enum class ModelKind { gnn, nn };

const char* to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;
};

/// Fan-in uniform initialisation U(-1/sqrt(fan_in), 1/sqrt(fan_in)) of every
/// parameter in declaration order, driven by one seeded stream.
void init_uniform_fan_in(std::vector<Parameter>& params, std::uint64_t seed);
void zero_grad(std::vector<Parameter>& params);
std::size_t parameter_count(const std::vector<Parameter>& params);

struct GnnConfig {
    std::size_t hidden_dim = 64;
    std::size_t edge_hidden = 32;
    std::size_t layer_count = 3;
    bool self_term = true; // root weight + bias per layer; off = aggregation only
};

/// Edge-conditioned message-passing network:
///   h0_i = W_in x_i
///   h_i <- relu(mean_{j->i} W_k(e_ji) h_j [+ R_k h_i + b_k])    (per layer k)
///   y_i = D2 relu(D1 h_i + c1) + c2
/// where W_k(e) is a d x d matrix produced by a two-layer perceptron on the
/// edge features. Messages follow edge direction (source -> target).
class SurrogateModel {
public:
    SurrogateModel() = default;
    SurrogateModel(const GnnConfig& config, std::uint64_t seed);

    const GnnConfig& config() const { return config_; }
    std::vector<Parameter>& parameters() { return params_; }
    const std::vector<Parameter>& parameters() const { return params_; }

    /// Intermediate values of one forward pass over a batch.
    struct Tape {
        // per layer, per edge
        std::vector<Matrix> edge_pre;    // E x edge_hidden
        std::vector<Matrix> edge_weight; // E x d^2
        // per sample, per layer (index 0 = input projection)
        std::vector<std::vector<Matrix>> hidden; // n x d, L + 1 entries
        std::vector<std::vector<Matrix>> pre;    // n x d, L entries
        std::vector<Matrix> decoder_pre;         // n x d
    };

    /// Forward over samples that share topology and edge features; returns one
    /// n x 3 matrix per sample in normalised target space.
    /// Throws Error(invalid_argument) if a node has no incoming edge.
    std::vector<Matrix> forward(const GraphTopology& topology, const Matrix& edge_features,
                                std::span<const Matrix> node_features, Tape* tape = nullptr) const;

    /// Accumulates parameter gradients given dLoss/dOutput per sample.
    void backward(const GraphTopology& topology, const Matrix& edge_features,
                  std::span<const Matrix> node_features, const Tape& tape,
                  std::span<const Matrix> output_grads);

private:
    struct LayerIndex {
        std::size_t edge_w1, edge_b1, edge_w2, edge_b2, root, bias;
    };

    GnnConfig config_;
    std::vector<Parameter> params_;
    std::size_t input_ = 0;
    std::vector<LayerIndex> layers_;
    std::size_t dec_w1_ = 0, dec_b1_ = 0, dec_w2_ = 0, dec_b2_ = 0;
};

/// Dense baseline: (f_mid, f_top) -> 64 -> 64 -> 18, relu hidden layers.
class BaselineModel {
public:
    static constexpr std::size_t kInputDim = 2;

    BaselineModel() = default;
    BaselineModel(std::size_t hidden_dim, std::size_t output_dim, std::uint64_t seed);

    std::size_t hidden_dim() const { return hidden_; }
    std::size_t output_dim() const { return output_; }
    std::vector<Parameter>& parameters() { return params_; }
    const std::vector<Parameter>& parameters() const { return params_; }

    struct Tape {
        Matrix pre1; // B x hidden
        Matrix pre2; // B x hidden
    };

    /// inputs: B x 2 normalised loads; returns B x output_dim.
    Matrix forward(const Matrix& inputs, Tape* tape = nullptr) const;
    void backward(const Matrix& inputs, const Tape& tape, const Matrix& output_grads);

private:
    std::size_t hidden_ = 64;
    std::size_t output_ = 18;
    std::vector<Parameter> params_;
};

/// Mean over free nodes of the squared error (summed over components) plus
/// lambda times the mean over fixed nodes of the squared deviation of the
/// prediction from `zero_point` (the normalised image of a zero response).
/// If `grad` is non-null it receives grad_scale * dLoss/dPred.
/// Throws Error(invalid_argument) if there are no free nodes.
double node_loss(const Matrix& pred, const Matrix& target, const std::vector<bool>& fixed,
                 double lambda, std::span<const double> zero_point, Matrix* grad = nullptr,
                 double grad_scale = 1.0);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    long long step = 0;
};

/// Bias-corrected Adam update in place; state is sized on first use.
void adam_step(std::vector<Parameter>& params, AdamState& state, const AdamConfig& config);

struct TrainConfig {
    ModelKind kind = ModelKind::gnn;
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    int max_epochs = 100;
    double lambda = 1.0;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t hidden_dim = 64;
    bool self_term = true;
    int refinement_level = 0;
    double split_fraction = 0.85; // recorded so evaluation can rebuild the split
    std::uint64_t split_seed = 0;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double test_loss = 0.0;
    double test_accuracy = 0.0; // zone profile
    std::size_t optimizer_steps = 0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = 0;
};

/// A network together with everything needed to run it on raw loads.
class TrainedModel {
public:
    ModelKind kind = ModelKind::gnn;
    SurrogateModel gnn;
    BaselineModel nn;
    NormStats stats;
    TrainConfig config;
    TrainHistory history;

    std::vector<Parameter>& parameters();
    const std::vector<Parameter>& parameters() const;

    /// Feature assembly, normalisation, forward and denormalisation.
    ResponseField predict(const Frame& frame, const LoadCase& loads) const;
    std::vector<ResponseField> predict(const Frame& frame, std::span<const LoadCase> loads) const;
};

/// Freshly initialised model for `config` with the given statistics.
TrainedModel make_model(const TrainConfig& config, const NormStats& stats, std::size_t frame_nodes);

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch Adam on the training split; the parameters with the lowest test
/// loss are retained. Throws Error(diverged) naming the epoch on a NaN loss.
TrainedModel train(const Frame& frame, const std::vector<CaseRecord>& training,
                   const std::vector<CaseRecord>& testing, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

/// Mean loss of a model over records (normalised space), as used in training.
double dataset_loss(const TrainedModel& model, const Frame& frame,
                    const std::vector<CaseRecord>& records);

/// Loss of the model on one mini-batch of records; when `accumulate_grads` is
/// set the gradients of the batch-mean loss are added to the parameters.
double batch_loss(TrainedModel& model, const Frame& frame, const std::vector<CaseRecord>& records,
                  bool accumulate_grads);

std::string checkpoint_to_json(const TrainedModel& model);
TrainedModel checkpoint_from_json(const std::string& text);
void save_checkpoint(const TrainedModel& model, const std::string& path);
TrainedModel load_checkpoint(const std::string& path);

} // namespace framelab

#endif // FRAMELAB_LEARNER_HPP
