#pragma once

#include <lapnet/nn.hpp>
#include <lapnet/spectral.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lapnet {

/// One Mesh Pooling Block: an upper per-vertex MLP path, a cluster pooling
/// path mixed by the correlation matrix C = Psi Psi^T, and a Correlation Net
/// producing the per-cluster embeddings Psi.
struct MPBConfig {
    int clusters = 16;
    std::vector<int> mlp_widths{128, 256};
    std::vector<int> corr_mlp_widths{64};
    /// Must equal corr_mlp_widths.back().
    int corr_dim = 64;
    /// Divide each row of C by its sum before mixing, so every cluster
    /// receives a convex combination of pooled features. With false, C is
    /// applied as is.
    bool normalize_correlation = true;
};

enum class Task { Segmentation, Classification };

struct HeadConfig {
    Task task = Task::Segmentation;
    /// |C_s|: size of the global part-label set (segmentation only).
    int num_labels = 0;
    /// |C_l|: number of object categories.
    int num_categories = 1;
    /// Per-vertex MLP widths before the global pooling.
    std::vector<int> mlp_widths{256, 128};
    /// Hidden width of the layer after pooling; the output layer is linear.
    int hidden_width = 128;
    /// Valid part labels per category, used to mask segmentation argmax.
    /// Empty means every label is valid for every category.
    std::vector<std::vector<int>> category_labels;
};

struct ModelConfig {
    int input_dim = kInputFeatureDim;
    std::vector<MPBConfig> blocks{MPBConfig{16}, MPBConfig{8}};
    HeadConfig head;
    nn::PoolMode pool = nn::PoolMode::Max;

    std::vector<int> cluster_counts() const;
    /// Feature width leaving the last block.
    int output_width() const;
};

/// Throws ArgumentError on non-positive widths, non-decreasing cluster counts,
/// or inconsistent head settings.
void validate_config(const ModelConfig& config);

/// Canonical JSON text (sorted keys, no whitespace); the config hash is the
/// FNV-1a digest of this string.
std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);
std::uint64_t config_hash(const ModelConfig& config);

/// Named parameters in creation order.
class ModelParams {
public:
    struct Entry {
        std::string name;
        nn::Parameter param;
    };

    nn::Parameter& add(std::string name, nn::Tensor initial);
    nn::Parameter& at(const std::string& name);
    const nn::Parameter& at(const std::string& name) const;
    bool contains(const std::string& name) const;

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t scalar_count() const;

private:
    std::vector<Entry> entries_;
};

/// Kaiming-normal weights (std sqrt(2 / fan_in)) and zero biases.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

/// Throws ArgumentError when `params` does not have exactly the shapes
/// `config` implies.
void check_param_shapes(const ModelConfig& config, const ModelParams& params);

using Var = nn::Tape::Var;

/// relu(x W + b), or the affine map alone when `activate` is false.
Var dense(nn::Tape& tape, Var x, nn::Parameter& weight, nn::Parameter& bias, bool activate);

/// Psi for one block: cluster pooling of the Correlation Net MLP output, [p x corr_dim].
Var correlation_embedding(nn::Tape& tape, Var features, std::span<const int> mask, ModelParams& params,
                          const std::string& prefix, const MPBConfig& block, nn::PoolMode pool);

/// C = Psi Psi^T, [p x p].
Var correlation_matrix(nn::Tape& tape, Var features, std::span<const int> mask, ModelParams& params,
                       const std::string& prefix, const MPBConfig& block, nn::PoolMode pool);

/// [N x c] -> [N x (mlp_widths.back() + c)]: concat(MLP(F), scatter(C P)),
/// with C row-normalized when the block asks for it.
Var mpb_forward(nn::Tape& tape, Var features, std::span<const int> mask, ModelParams& params,
                const std::string& prefix, const MPBConfig& block, nn::PoolMode pool);

/// Per-vertex logits [N x num_labels].
Var seg_head_forward(nn::Tape& tape, Var features, const nn::Tensor& category_onehot, ModelParams& params,
                     const HeadConfig& head);

/// Object logits [1 x num_categories].
Var cls_head_forward(nn::Tape& tape, Var features, ModelParams& params, const HeadConfig& head);

/// Chains every block over its hierarchy level, then the configured head.
/// `category` is required for segmentation.
Var model_forward(nn::Tape& tape, const Matrix& features, const PoolingHierarchy& hierarchy,
                  std::optional<int> category, ModelParams& params, const ModelConfig& config);

/// Parameter-name prefix of block `l`.
std::string block_prefix(int l);

nn::Tensor one_hot_row(int index, int width);

/// Argmax per row, restricted to `allowed` when it is non-empty.
std::vector<int> masked_argmax(const nn::Tensor& logits, const std::vector<int>& allowed);

} // namespace lapnet
