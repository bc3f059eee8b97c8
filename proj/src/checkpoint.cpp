#include "framelab/error.hpp"
#include "framelab/learner.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace framelab {

namespace {

using nlohmann::json;

constexpr int kCheckpointSchemaVersion = 1;

json stats_to_json(const FeatureStats& s) {
    return {{"mean", s.mean}, {"std", s.std}};
}

FeatureStats stats_from_json(const json& j, std::size_t dim, const char* what) {
    FeatureStats s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.std = j.at("std").get<std::vector<double>>();
    if (s.mean.size() != dim || s.std.size() != dim) {
        fail(ErrorKind::schema, std::string("checkpoint: norm_stats.") + what + " has wrong size");
    }
    return s;
}

json config_to_json(const TrainConfig& c) {
    return {{"model", to_string(c.kind)},
            {"learning_rate", c.learning_rate},
            {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},
            {"lambda", c.lambda},
            {"seed", c.seed},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"epsilon", c.epsilon},
            {"hidden_dim", c.hidden_dim},
            {"self_term", c.self_term},
            {"refinement_level", c.refinement_level},
            {"split_fraction", c.split_fraction},
            {"split_seed", c.split_seed}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.kind = parse_model_kind(j.at("model").get<std::string>());
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.max_epochs = j.at("max_epochs").get<int>();
    c.lambda = j.at("lambda").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.self_term = j.at("self_term").get<bool>();
    c.refinement_level = j.at("refinement_level").get<int>();
    c.split_fraction = j.at("split_fraction").get<double>();
    c.split_seed = j.at("split_seed").get<std::uint64_t>();
    return c;
}

} // namespace

std::string checkpoint_to_json(const TrainedModel& model) {
    json params = json::object();
    for (const auto& p : model.parameters()) {
        params[p.name] = {{"shape", {p.value.rows(), p.value.cols()}}, {"data", p.value.values()}};
    }
    json history = json::array();
    for (const auto& e : model.history.epochs) {
        history.push_back({{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"test_loss", e.test_loss},
                           {"test_accuracy", e.test_accuracy}});
    }
    const bool gnn = model.kind == ModelKind::gnn;
    json j = {
        {"schema_version", kCheckpointSchemaVersion},
        {"model_kind", to_string(model.kind)},
        {"hidden_dim", gnn ? model.gnn.config().hidden_dim : model.nn.hidden_dim()},
        {"layer_count", gnn ? model.gnn.config().layer_count : std::size_t{2}},
        {"self_term_flag", gnn && model.gnn.config().self_term},
        {"edge_hidden", gnn ? model.gnn.config().edge_hidden : std::size_t{0}},
        {"output_dim", gnn ? kTargetDim : model.nn.output_dim()},
        {"init", "uniform_fan_in"},
        {"seed", model.config.seed},
        {"parameters", params},
        {"norm_stats",
         {{"convention", model.stats.convention},
          {"node", stats_to_json(model.stats.node)},
          {"edge", stats_to_json(model.stats.edge)},
          {"target", stats_to_json(model.stats.target)},
          {"load", stats_to_json(model.stats.load)}}},
        {"train_config", config_to_json(model.config)},
        {"history", {{"best_epoch", model.history.best_epoch}, {"epochs", history}}},
    };
    return j.dump(1) + "\n";
}

TrainedModel checkpoint_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::parse, std::string("checkpoint: malformed JSON: ") + e.what());
    }
    try {
        const int version = j.at("schema_version").get<int>();
        if (version > kCheckpointSchemaVersion) {
            fail(ErrorKind::version, "checkpoint: schema_version " + std::to_string(version) +
                                         " is newer than supported " +
                                         std::to_string(kCheckpointSchemaVersion));
        }
        TrainedModel m;
        m.config = config_from_json(j.at("train_config"));
        m.kind = parse_model_kind(j.at("model_kind").get<std::string>());
        m.config.kind = m.kind;
        const auto& ns = j.at("norm_stats");
        m.stats.convention = ns.at("convention").get<std::string>();
        if (m.stats.convention != "population") {
            fail(ErrorKind::schema, "checkpoint: unsupported normalisation convention '" +
                                        m.stats.convention + "'");
        }
        m.stats.node = stats_from_json(ns.at("node"), kNodeFeatureDim, "node");
        m.stats.edge = stats_from_json(ns.at("edge"), kEdgeFeatureDim, "edge");
        m.stats.target = stats_from_json(ns.at("target"), kTargetDim, "target");
        m.stats.load = stats_from_json(ns.at("load"), 2, "load");

        const auto hidden = j.at("hidden_dim").get<std::size_t>();
        if (m.kind == ModelKind::gnn) {
            GnnConfig g;
            g.hidden_dim = hidden;
            g.layer_count = j.at("layer_count").get<std::size_t>();
            g.self_term = j.at("self_term_flag").get<bool>();
            g.edge_hidden = j.at("edge_hidden").get<std::size_t>();
            m.gnn = SurrogateModel(g, m.config.seed);
        } else {
            m.nn = BaselineModel(hidden, j.at("output_dim").get<std::size_t>(), m.config.seed);
        }

        const auto& params = j.at("parameters");
        auto& target = m.parameters();
        if (params.size() != target.size()) {
            fail(ErrorKind::schema, "checkpoint: expected " + std::to_string(target.size()) +
                                        " parameter tensors, found " + std::to_string(params.size()));
        }
        for (auto& p : target) {
            if (!params.contains(p.name)) {
                fail(ErrorKind::schema, "checkpoint: missing parameter '" + p.name + "'");
            }
            const auto& entry = params.at(p.name);
            const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
            auto data = entry.at("data").get<std::vector<double>>();
            if (shape.size() != 2 || shape[0] != p.value.rows() || shape[1] != p.value.cols() ||
                data.size() != p.value.size()) {
                fail(ErrorKind::schema, "checkpoint: parameter '" + p.name + "' has wrong shape");
            }
            p.value.values() = std::move(data);
        }

        if (j.contains("history")) {
            const auto& h = j.at("history");
            m.history.best_epoch = h.at("best_epoch").get<int>();
            for (const auto& e : h.at("epochs")) {
                EpochStats es;
                es.epoch = e.at("epoch").get<int>();
                es.train_loss = e.at("train_loss").get<double>();
                es.test_loss = e.at("test_loss").get<double>();
                es.test_accuracy = e.at("test_accuracy").get<double>();
                m.history.epochs.push_back(es);
            }
        }
        return m;
    } catch (const json::exception& e) {
        fail(ErrorKind::schema, std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const TrainedModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorKind::io, "cannot open '" + path + "' for writing");
    }
    out << checkpoint_to_json(model);
    if (!out) {
        fail(ErrorKind::io, "write to '" + path + "' failed");
    }
}

TrainedModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorKind::io, "cannot open checkpoint '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_json(buf.str());
}

} // namespace framelab
