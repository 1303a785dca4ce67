#include <lapnet/network.hpp>

#include <json.hpp>

#include <random>

namespace lapnet {

using nn::Tape;
using nn::Tensor;
using json = nlohmann::json;

namespace {

std::string layer(const std::string& prefix, const char* kind, std::size_t i)
{
    return prefix + "." + kind + std::to_string(i);
}

void check_positive(const std::vector<int>& widths, const std::string& what)
{
    if (widths.empty()) {
        throw ArgumentError(what + " needs at least one layer");
    }
    for (int w : widths) {
        if (w <= 0) {
            throw ArgumentError(what + " widths must be positive");
        }
    }
}

struct LayerShape {
    std::string name;
    int in;
    int out;
};

// Every dense layer of the model in creation order.
std::vector<LayerShape> layer_shapes(const ModelConfig& config)
{
    std::vector<LayerShape> layers;
    int width = config.input_dim;
    for (std::size_t l = 0; l < config.blocks.size(); ++l) {
        const auto& block = config.blocks[l];
        const std::string prefix = block_prefix(static_cast<int>(l));
        int in = width;
        for (std::size_t i = 0; i < block.mlp_widths.size(); ++i) {
            layers.push_back({layer(prefix, "mlp", i), in, block.mlp_widths[i]});
            in = block.mlp_widths[i];
        }
        in = width;
        for (std::size_t i = 0; i < block.corr_mlp_widths.size(); ++i) {
            layers.push_back({layer(prefix, "corr", i), in, block.corr_mlp_widths[i]});
            in = block.corr_mlp_widths[i];
        }
        width = block.mlp_widths.back() + width;
    }

    const auto& head = config.head;
    int in = width;
    for (std::size_t i = 0; i < head.mlp_widths.size(); ++i) {
        layers.push_back({layer("head", "mlp", i), in, head.mlp_widths[i]});
        in = head.mlp_widths[i];
    }
    const int pooled = head.mlp_widths.back();
    if (head.task == Task::Segmentation) {
        layers.push_back({"head.fc0", pooled + pooled + head.num_categories, head.hidden_width});
        layers.push_back({"head.out", head.hidden_width, head.num_labels});
    } else {
        layers.push_back({"head.fc0", pooled, head.hidden_width});
        layers.push_back({"head.out", head.hidden_width, head.num_categories});
    }
    return layers;
}

Var dense_named(Tape& tape, Var x, ModelParams& params, const std::string& name, bool activate)
{
    return dense(tape, x, params.at(name + ".weight"), params.at(name + ".bias"), activate);
}

Var mlp_stack(Tape& tape, Var x, ModelParams& params, const std::string& prefix, const char* kind, std::size_t count)
{
    for (std::size_t i = 0; i < count; ++i) {
        x = dense_named(tape, x, params, layer(prefix, kind, i), true);
    }
    return x;
}

} // namespace

std::vector<int> ModelConfig::cluster_counts() const
{
    std::vector<int> counts;
    for (const auto& b : blocks) {
        counts.push_back(b.clusters);
    }
    return counts;
}

int ModelConfig::output_width() const
{
    int width = input_dim;
    for (const auto& b : blocks) {
        width += b.mlp_widths.back();
    }
    return width;
}

void validate_config(const ModelConfig& config)
{
    if (config.input_dim <= 0) {
        throw ArgumentError("input_dim must be positive");
    }
    for (std::size_t l = 0; l < config.blocks.size(); ++l) {
        const auto& b = config.blocks[l];
        if (b.clusters <= 0 || (l > 0 && b.clusters >= config.blocks[l - 1].clusters)) {
            throw ArgumentError("block cluster counts must be positive and strictly decreasing");
        }
        check_positive(b.mlp_widths, "block MLP");
        check_positive(b.corr_mlp_widths, "Correlation Net MLP");
        if (b.corr_dim != b.corr_mlp_widths.back()) {
            throw ArgumentError("corr_dim must equal the last Correlation Net width");
        }
    }
    const auto& h = config.head;
    check_positive(h.mlp_widths, "head MLP");
    if (h.hidden_width <= 0 || h.num_categories <= 0) {
        throw ArgumentError("head widths and category count must be positive");
    }
    if (h.task == Task::Segmentation) {
        if (h.num_labels <= 0) {
            throw ArgumentError("segmentation head needs at least one part label");
        }
        if (!h.category_labels.empty()) {
            if (static_cast<int>(h.category_labels.size()) != h.num_categories) {
                throw ArgumentError("category_labels must list one label set per category");
            }
            for (const auto& labels : h.category_labels) {
                for (int label : labels) {
                    if (label < 0 || label >= h.num_labels) {
                        throw ArgumentError("category label " + std::to_string(label) + " out of range");
                    }
                }
            }
        }
    }
}

std::string config_to_json(const ModelConfig& config)
{
    json blocks = json::array();
    for (const auto& b : config.blocks) {
        blocks.push_back({{"clusters", b.clusters},
                          {"mlp_widths", b.mlp_widths},
                          {"corr_mlp_widths", b.corr_mlp_widths},
                          {"corr_dim", b.corr_dim},
                          {"normalize_correlation", b.normalize_correlation}});
    }
    const auto& h = config.head;
    json head = {{"task", h.task == Task::Segmentation ? "seg" : "cls"},
                 {"num_labels", h.num_labels},
                 {"num_categories", h.num_categories},
                 {"mlp_widths", h.mlp_widths},
                 {"hidden_width", h.hidden_width},
                 {"category_labels", h.category_labels}};
    json j = {{"input_dim", config.input_dim},
              {"blocks", blocks},
              {"head", head},
              {"pool", config.pool == nn::PoolMode::Max ? "max" : "mean"}};
    return j.dump();
}

ModelConfig config_from_json(const std::string& text)
{
    ModelConfig config;
    try {
        const json j = json::parse(text);
        config.input_dim = j.at("input_dim").get<int>();
        config.blocks.clear();
        for (const auto& b : j.at("blocks")) {
            MPBConfig block;
            block.clusters = b.at("clusters").get<int>();
            block.mlp_widths = b.at("mlp_widths").get<std::vector<int>>();
            block.corr_mlp_widths = b.at("corr_mlp_widths").get<std::vector<int>>();
            block.corr_dim = b.at("corr_dim").get<int>();
            block.normalize_correlation = b.at("normalize_correlation").get<bool>();
            config.blocks.push_back(block);
        }
        const auto& h = j.at("head");
        config.head.task = h.at("task").get<std::string>() == "seg" ? Task::Segmentation : Task::Classification;
        config.head.num_labels = h.at("num_labels").get<int>();
        config.head.num_categories = h.at("num_categories").get<int>();
        config.head.mlp_widths = h.at("mlp_widths").get<std::vector<int>>();
        config.head.hidden_width = h.at("hidden_width").get<int>();
        config.head.category_labels = h.at("category_labels").get<std::vector<std::vector<int>>>();
        config.pool = j.at("pool").get<std::string>() == "mean" ? nn::PoolMode::Mean : nn::PoolMode::Max;
    } catch (const json::exception& e) {
        throw ArgumentError(std::string("invalid model config: ") + e.what());
    }
    validate_config(config);
    return config;
}

std::uint64_t config_hash(const ModelConfig& config)
{
    Fnv1a h;
    h.update(config_to_json(config));
    return h.digest();
}

nn::Parameter& ModelParams::add(std::string name, Tensor initial)
{
    if (contains(name)) {
        throw ArgumentError("duplicate parameter " + name);
    }
    entries_.push_back({std::move(name), nn::Parameter(std::move(initial))});
    return entries_.back().param;
}

nn::Parameter& ModelParams::at(const std::string& name)
{
    for (auto& e : entries_) {
        if (e.name == name) {
            return e.param;
        }
    }
    throw ArgumentError("unknown parameter " + name);
}

const nn::Parameter& ModelParams::at(const std::string& name) const
{
    return const_cast<ModelParams*>(this)->at(name);
}

bool ModelParams::contains(const std::string& name) const
{
    for (const auto& e : entries_) {
        if (e.name == name) {
            return true;
        }
    }
    return false;
}

std::size_t ModelParams::scalar_count() const
{
    std::size_t total = 0;
    for (const auto& e : entries_) {
        total += static_cast<std::size_t>(e.param.value.size());
    }
    return total;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed)
{
    validate_config(config);
    std::mt19937_64 rng(seed);
    ModelParams params;
    for (const auto& shape : layer_shapes(config)) {
        std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / shape.in));
        Tensor w(shape.in, shape.out);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                w(r, c) = normal(rng);
            }
        }
        params.add(shape.name + ".weight", std::move(w));
        params.add(shape.name + ".bias", Tensor::Zero(1, shape.out));
    }
    return params;
}

void check_param_shapes(const ModelConfig& config, const ModelParams& params)
{
    const auto shapes = layer_shapes(config);
    if (params.entries().size() != 2 * shapes.size()) {
        throw ArgumentError("parameter count does not match model config");
    }
    for (const auto& shape : shapes) {
        const auto& w = params.at(shape.name + ".weight").value;
        const auto& b = params.at(shape.name + ".bias").value;
        if (w.rows() != shape.in || w.cols() != shape.out || b.rows() != 1 || b.cols() != shape.out) {
            throw ArgumentError("parameter " + shape.name + " has the wrong shape");
        }
    }
}

std::string block_prefix(int l)
{
    return "block" + std::to_string(l);
}

Var dense(Tape& tape, Var x, nn::Parameter& weight, nn::Parameter& bias, bool activate)
{
    Var y = tape.bias_add(tape.matmul(x, tape.parameter(weight)), tape.parameter(bias));
    return activate ? tape.relu(y) : y;
}

Var correlation_embedding(Tape& tape, Var features, std::span<const int> mask, ModelParams& params,
                          const std::string& prefix, const MPBConfig& block, nn::PoolMode pool)
{
    Var latent = mlp_stack(tape, features, params, prefix, "corr", block.corr_mlp_widths.size());
    return tape.cluster_pool(latent, mask, block.clusters, pool);
}

Var correlation_matrix(Tape& tape, Var features, std::span<const int> mask, ModelParams& params,
                       const std::string& prefix, const MPBConfig& block, nn::PoolMode pool)
{
    Var psi = correlation_embedding(tape, features, mask, params, prefix, block, pool);
    return tape.matmul_transposed(psi, psi);
}

Var mpb_forward(Tape& tape, Var features, std::span<const int> mask, ModelParams& params,
                const std::string& prefix, const MPBConfig& block, nn::PoolMode pool)
{
    if (static_cast<Eigen::Index>(mask.size()) != tape.value(features).rows()) {
        throw ArgumentError(prefix + ": mask length does not match vertex count");
    }
    Var upper = mlp_stack(tape, features, params, prefix, "mlp", block.mlp_widths.size());
    Var pooled = tape.cluster_pool(features, mask, block.clusters, pool);
    Var corr = correlation_matrix(tape, features, mask, params, prefix, block, pool);
    if (block.normalize_correlation) {
        corr = tape.row_normalize(corr);
    }
    Var mixed = tape.matmul(corr, pooled);
    return tape.concat(upper, tape.cluster_scatter(mixed, mask), 1);
}

Var seg_head_forward(Tape& tape, Var features, const Tensor& category_onehot, ModelParams& params,
                     const HeadConfig& head)
{
    if (category_onehot.rows() != 1 || category_onehot.cols() != head.num_categories) {
        throw ArgumentError("category one-hot must be 1 x " + std::to_string(head.num_categories));
    }
    const Eigen::Index n = tape.value(features).rows();
    Var local = mlp_stack(tape, features, params, "head", "mlp", head.mlp_widths.size());
    Var global = tape.concat(tape.global_max_pool(local), tape.input(category_onehot), 1);
    const std::vector<int> broadcast(n, 0);
    Var joined = tape.concat(local, tape.cluster_scatter(global, broadcast), 1);
    Var hidden = dense_named(tape, joined, params, "head.fc0", true);
    return dense_named(tape, hidden, params, "head.out", false);
}

Var cls_head_forward(Tape& tape, Var features, ModelParams& params, const HeadConfig& head)
{
    if (tape.value(features).rows() < 1) {
        throw ArgumentError("classification head needs at least one vertex");
    }
    Var local = mlp_stack(tape, features, params, "head", "mlp", head.mlp_widths.size());
    Var hidden = dense_named(tape, tape.global_max_pool(local), params, "head.fc0", true);
    return dense_named(tape, hidden, params, "head.out", false);
}

Var model_forward(Tape& tape, const Matrix& features, const PoolingHierarchy& hierarchy,
                  std::optional<int> category, ModelParams& params, const ModelConfig& config)
{
    if (features.cols() != config.input_dim) {
        throw ArgumentError("feature width " + std::to_string(features.cols()) + " != input_dim "
                            + std::to_string(config.input_dim));
    }
    if (hierarchy.num_levels() != static_cast<int>(config.blocks.size())) {
        throw ArgumentError("hierarchy has " + std::to_string(hierarchy.num_levels()) + " levels; model expects "
                            + std::to_string(config.blocks.size()));
    }
    for (std::size_t l = 0; l < config.blocks.size(); ++l) {
        if (hierarchy.levels[l].clusters != config.blocks[l].clusters) {
            throw ArgumentError("hierarchy level " + std::to_string(l) + " has "
                                + std::to_string(hierarchy.levels[l].clusters) + " clusters; model expects "
                                + std::to_string(config.blocks[l].clusters));
        }
    }

    Var x = tape.input(features);
    for (std::size_t l = 0; l < config.blocks.size(); ++l) {
        x = mpb_forward(tape, x, hierarchy.levels[l].mask, params, block_prefix(static_cast<int>(l)),
                        config.blocks[l], config.pool);
    }
    if (config.head.task == Task::Classification) {
        return cls_head_forward(tape, x, params, config.head);
    }
    if (!category || *category < 0 || *category >= config.head.num_categories) {
        throw ArgumentError("segmentation needs a category in [0, " + std::to_string(config.head.num_categories)
                            + ")");
    }
    return seg_head_forward(tape, x, one_hot_row(*category, config.head.num_categories), params, config.head);
}

Tensor one_hot_row(int index, int width)
{
    Tensor t = Tensor::Zero(1, width);
    t(0, index) = 1.0;
    return t;
}

std::vector<int> masked_argmax(const Tensor& logits, const std::vector<int>& allowed)
{
    std::vector<int> out(logits.rows(), 0);
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        int best = -1;
        if (allowed.empty()) {
            Eigen::Index idx = 0;
            logits.row(r).maxCoeff(&idx);
            best = static_cast<int>(idx);
        } else {
            for (int label : allowed) {
                if (best < 0 || logits(r, label) > logits(r, best)
                    || (logits(r, label) == logits(r, best) && label < best)) {
                    best = label;
                }
            }
        }
        out[r] = best;
    }
    return out;
}

} // namespace lapnet
