#include <string>

#include "metroflow/error.hpp"
#include "metroflow/models.hpp"

namespace metroflow::models {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

nlohmann::json tree_json(const RegressionTree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes()) {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"value", n.value},
                         {"samples", n.samples}});
    }
    return {{"n_features", tree.n_features()}, {"nodes", std::move(nodes)}};
}

RegressionTree tree_from(const nlohmann::json& j) {
    std::vector<RegressionTree::Node> nodes;
    for (const auto& n : j.at("nodes")) {
        RegressionTree::Node node;
        node.feature = n.at("feature").get<int>();
        node.threshold = n.at("threshold").get<double>();
        node.left = n.at("left").get<int>();
        node.right = n.at("right").get<int>();
        node.value = n.at("value").get<double>();
        node.samples = n.at("samples").get<std::size_t>();
        nodes.push_back(node);
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (!n.is_leaf() && (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) ||
                             n.left >= static_cast<int>(nodes.size()) || n.right >= static_cast<int>(nodes.size()))) {
            throw InvalidArgument("models", "model_from_json", "malformed tree topology");
        }
    }
    return RegressionTree(std::move(nodes), j.at("n_features").get<std::size_t>());
}

nlohmann::json tree_params_json(const TreeParams& p) {
    return {{"max_depth", p.max_depth ? nlohmann::json(*p.max_depth) : nlohmann::json(nullptr)},
            {"min_samples_leaf", p.min_samples_leaf},
            {"min_impurity_decrease", p.min_impurity_decrease}};
}

TreeParams tree_params_from(const nlohmann::json& j) {
    TreeParams p;
    if (!j.at("max_depth").is_null()) p.max_depth = j.at("max_depth").get<int>();
    p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
    p.min_impurity_decrease = j.at("min_impurity_decrease").get<double>();
    return p;
}

}  // namespace

std::vector<double> predict(const FittedModel& model, MatrixView X) {
    return std::visit([&](const auto& m) { return m.predict(X); }, model);
}

std::string model_kind(const FittedModel& model) {
    return std::visit(Overloaded{[](const RegressionTree&) { return std::string("tree"); },
                                 [](const Ensemble& e) {
                                     return std::string(e.kind() == EnsembleKind::Bagging ? "bagging" : "forest");
                                 },
                                 [](const Mlp&) { return std::string("mlp"); }},
                      model);
}

nlohmann::json to_json(const FittedModel& model) {
    nlohmann::json j;
    j["kind"] = model_kind(model);
    std::visit(Overloaded{[&](const RegressionTree& t) { j["tree"] = tree_json(t); },
                          [&](const Ensemble& e) {
                              j["tree_params"] = tree_params_json(e.tree_params());
                              j["params"] = {{"n_estimators", e.params().n_estimators},
                                             {"seed", e.params().seed},
                                             {"feature_subsample", e.params().feature_subsample},
                                             {"bootstrap_size", e.params().bootstrap_size}};
                              auto trees = nlohmann::json::array();
                              for (const auto& t : e.trees()) trees.push_back(tree_json(t));
                              j["trees"] = std::move(trees);
                          },
                          [&](const Mlp& m) {
                              j["params"] = {{"hidden_layers", m.params().hidden_layers},
                                             {"learning_rate", m.params().learning_rate},
                                             {"epochs", m.params().epochs},
                                             {"batch_size", m.params().batch_size},
                                             {"seed", m.params().seed}};
                              auto layers = nlohmann::json::array();
                              for (const auto& L : m.layers()) {
                                  layers.push_back(
                                      {{"in", L.in}, {"out", L.out}, {"weights", L.weights}, {"bias", L.bias}});
                              }
                              j["layers"] = std::move(layers);
                              j["loss_history"] = m.loss_history();
                          }},
               model);
    return j;
}

FittedModel model_from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "tree") return tree_from(j.at("tree"));
    if (kind == "bagging" || kind == "forest") {
        EnsembleParams p;
        const auto& pj = j.at("params");
        p.n_estimators = pj.at("n_estimators").get<int>();
        p.seed = pj.at("seed").get<std::uint64_t>();
        p.feature_subsample = pj.at("feature_subsample").get<double>();
        p.bootstrap_size = pj.at("bootstrap_size").get<double>();
        std::vector<RegressionTree> trees;
        for (const auto& t : j.at("trees")) trees.push_back(tree_from(t));
        return Ensemble(kind == "bagging" ? EnsembleKind::Bagging : EnsembleKind::RandomForest, std::move(trees),
                        tree_params_from(j.at("tree_params")), p);
    }
    if (kind == "mlp") {
        MlpParams p;
        const auto& pj = j.at("params");
        p.hidden_layers = pj.at("hidden_layers").get<std::vector<int>>();
        p.learning_rate = pj.at("learning_rate").get<double>();
        p.epochs = pj.at("epochs").get<int>();
        p.batch_size = pj.at("batch_size").get<int>();
        p.seed = pj.at("seed").get<std::uint64_t>();
        const auto& layers_json = j.at("layers");
        if (layers_json.empty()) throw InvalidArgument("models", "model_from_json", "mlp without layers");
        Mlp net(layers_json.front().at("in").get<std::size_t>(), p);
        auto& layers = net.layers();
        if (layers.size() != layers_json.size()) {
            throw InvalidArgument("models", "model_from_json", "layer count disagrees with hidden_layers");
        }
        for (std::size_t l = 0; l < layers.size(); ++l) {
            layers[l].weights = layers_json[l].at("weights").get<std::vector<double>>();
            layers[l].bias = layers_json[l].at("bias").get<std::vector<double>>();
            if (layers[l].weights.size() != layers[l].in * layers[l].out || layers[l].bias.size() != layers[l].out) {
                throw InvalidArgument("models", "model_from_json", "layer shape mismatch");
            }
        }
        net.loss_history() = j.at("loss_history").get<std::vector<double>>();
        return net;
    }
    throw InvalidArgument("models", "model_from_json", "unknown model kind '" + kind + "'");
}

}  // namespace metroflow::models
