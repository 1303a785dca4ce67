#pragma once

#include <lapnet/network.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lapnet {

struct SampleRecord {
    std::string id;
    Matrix features;
    PoolingHierarchy hierarchy;
    /// Per-vertex part labels; empty for classification samples.
    std::vector<int> part_labels;
    int category = 0;

    int num_vertices() const { return static_cast<int>(features.rows()); }
};

using Dataset = std::vector<SampleRecord>;

/// Throws ArgumentError when a sample disagrees with `config` (feature width,
/// hierarchy shape, label ranges).
void validate_sample(const SampleRecord& sample, const ModelConfig& config);

struct TrainConfig {
    int epochs = 200;
    /// Meshes per optimizer step (gradient accumulation).
    int batch = 8;
    double learning_rate = 7e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 1;
    std::vector<int> cluster_counts{16, 8};
    int eigen_count = kDefaultEigenFeatures;

    nn::AdamOptions adam() const { return {learning_rate, beta1, beta2, epsilon}; }
};

struct EpochRecord {
    int epoch = 0;
    double mean_loss = 0.0;
    /// Vertex accuracy (segmentation) or sample accuracy (classification) of
    /// the forward passes made while training this epoch.
    double train_accuracy = 0.0;
    int steps = 0;
};

std::string epoch_record_json(const EpochRecord& record);

/// Everything needed to continue training: parameters (with Adam moments and
/// step counters) plus the number of completed epochs.
struct TrainState {
    ModelParams params;
    int epoch = 0;
};

TrainState init_train_state(const ModelConfig& config, std::uint64_t seed);

/// Loss of one sample on `tape`: mean per-vertex cross-entropy for
/// segmentation, cross-entropy of the object logits for classification.
Var sample_loss(nn::Tape& tape, const SampleRecord& sample, ModelParams& params, const ModelConfig& config);

/// Accumulates d(loss)/d(params) * weight into every Parameter::grad and
/// returns the loss. Optionally reports the number of correct predictions
/// (vertices or samples) and the prediction count.
double accumulate_sample_gradient(const SampleRecord& sample, ModelParams& params, const ModelConfig& config,
                                  double weight, int* correct = nullptr, int* total = nullptr);

/// Epoch order used by train(): a seeded shuffle that depends only on
/// (seed, epoch, dataset size).
std::vector<std::size_t> epoch_order(std::size_t size, std::uint64_t seed, int epoch);

using EpochCallback = std::function<void(const EpochRecord&, const TrainState&)>;

class TrainingError : public Error {
public:
    using Error::Error;
};

/// Runs epochs until state.epoch == config.epochs. Each step averages the
/// per-mesh loss over up to `batch` meshes and applies one Adam update.
/// Throws TrainingError naming the sample when a loss is not finite.
std::vector<EpochRecord> train(TrainState& state, const Dataset& dataset, const ModelConfig& model_config,
                               const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Predicted per-vertex labels (segmentation, category-masked) or a single
/// predicted category (classification).
std::vector<int> predict(const SampleRecord& sample, ModelParams& params, const ModelConfig& config);

// ---------------------------------------------------------------------------
// Metrics

struct CategoryMetrics {
    int category = 0;
    int samples = 0;
    long long vertices = 0;
    long long correct = 0;
    double accuracy = 0.0;
    /// Mean over shapes of the per-shape mean part IoU (segmentation only).
    double iou = 0.0;
};

struct Metrics {
    double accuracy = 0.0;
    double iou = 0.0;
    int samples = 0;
    std::vector<CategoryMetrics> per_category;
    std::vector<EpochRecord> history;
};

/// Mean IoU over `parts` for one shape. A part absent from both prediction
/// and ground truth contributes 1.
double shape_iou(const std::vector<int>& predicted, const std::vector<int>& truth, const std::vector<int>& parts);

/// Accuracy per category is correct/total vertices; IoU per category is the
/// mean of shape IoUs. Overall values are the vertex-weighted (accuracy) and
/// shape-weighted (IoU) means of the category rows.
Metrics segmentation_metrics(const std::vector<std::vector<int>>& predictions, const Dataset& dataset,
                             const ModelConfig& config);

Metrics classification_metrics(const std::vector<int>& predictions, const Dataset& dataset);

Metrics evaluate_segmentation(ModelParams& params, const ModelConfig& config, const Dataset& dataset);
Metrics evaluate_classification(ModelParams& params, const ModelConfig& config, const Dataset& dataset);

// ---------------------------------------------------------------------------
// Splits

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Seeded split stratified by category. `ratios` = {train, test} and must sum
/// to 1. Throws ArgumentError when a category has fewer samples than there
/// are non-empty splits.
DatasetSplit split_dataset(const std::vector<int>& categories, const std::vector<double>& ratios, std::uint64_t seed);

Dataset subset(const Dataset& dataset, const std::vector<std::size_t>& indices);

// ---------------------------------------------------------------------------
// Checkpoints

class CheckpointError : public Error {
public:
    enum class Kind { Io, BadMagic, Version, Corrupt, ConfigMismatch };

    CheckpointError(Kind kind, const std::string& what)
        : Error(what)
        , kind_(kind)
    {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelConfig config;
    TrainState state;
    TrainConfig train_config;
};

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config, const TrainState& state,
                     const TrainConfig& train_config = {});

/// Reads any valid checkpoint; its embedded config is returned.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// As above, but throws CheckpointError(ConfigMismatch) unless the stored
/// config hash equals config_hash(expected).
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

} // namespace lapnet
