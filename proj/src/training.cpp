#include <lapnet/training.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace lapnet {

using nn::Tape;
using nn::Tensor;

namespace {

Tensor one_hot_rows(const std::vector<int>& labels, int width)
{
    Tensor t = Tensor::Zero(static_cast<Eigen::Index>(labels.size()), width);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        t(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    return t;
}

const std::vector<int>& allowed_labels(const ModelConfig& config, int category)
{
    static const std::vector<int> none;
    const auto& table = config.head.category_labels;
    return table.empty() ? none : table.at(category);
}

} // namespace

void validate_sample(const SampleRecord& sample, const ModelConfig& config)
{
    const std::string where = "sample '" + sample.id + "': ";
    if (sample.features.cols() != config.input_dim) {
        throw ArgumentError(where + "feature width " + std::to_string(sample.features.cols()) + " != "
                            + std::to_string(config.input_dim));
    }
    try {
        validate_hierarchy(sample.hierarchy, sample.num_vertices());
    } catch (const ArgumentError& e) {
        throw ArgumentError(where + e.what());
    }
    if (sample.hierarchy.num_levels() != static_cast<int>(config.blocks.size())) {
        throw ArgumentError(where + "hierarchy depth does not match the model");
    }
    for (std::size_t l = 0; l < config.blocks.size(); ++l) {
        if (sample.hierarchy.levels[l].clusters != config.blocks[l].clusters) {
            throw ArgumentError(where + "hierarchy cluster counts do not match the model");
        }
    }
    if (sample.category < 0 || sample.category >= config.head.num_categories) {
        throw ArgumentError(where + "category " + std::to_string(sample.category) + " out of range");
    }
    if (config.head.task == Task::Segmentation) {
        if (static_cast<int>(sample.part_labels.size()) != sample.num_vertices()) {
            throw ArgumentError(where + "part label count does not match vertex count");
        }
        for (int label : sample.part_labels) {
            if (label < 0 || label >= config.head.num_labels) {
                throw ArgumentError(where + "part label " + std::to_string(label) + " out of range");
            }
        }
    }
}

std::string epoch_record_json(const EpochRecord& record)
{
    nlohmann::json j = {{"epoch", record.epoch},
                        {"loss", record.mean_loss},
                        {"train_accuracy", record.train_accuracy},
                        {"steps", record.steps}};
    return j.dump();
}

TrainState init_train_state(const ModelConfig& config, std::uint64_t seed)
{
    return TrainState{init_params(config, seed), 0};
}

static Var loss_from_logits(Tape& tape, Var logits, const SampleRecord& sample, const ModelConfig& config)
{
    if (config.head.task == Task::Segmentation) {
        return tape.softmax_cross_entropy(logits, one_hot_rows(sample.part_labels, config.head.num_labels));
    }
    return tape.softmax_cross_entropy(logits, one_hot_row(sample.category, config.head.num_categories));
}

Var sample_loss(Tape& tape, const SampleRecord& sample, ModelParams& params, const ModelConfig& config)
{
    Var logits = model_forward(tape, sample.features, sample.hierarchy, sample.category, params, config);
    return loss_from_logits(tape, logits, sample, config);
}

double accumulate_sample_gradient(const SampleRecord& sample, ModelParams& params, const ModelConfig& config,
                                  double weight, int* correct, int* total)
{
    Tape tape;
    Var logits_var = model_forward(tape, sample.features, sample.hierarchy, sample.category, params, config);
    Var loss = loss_from_logits(tape, logits_var, sample, config);
    const double value = tape.value(loss)(0, 0);
    if (!std::isfinite(value)) {
        return value;
    }
    if (correct != nullptr && total != nullptr) {
        const Tensor& logits = tape.value(logits_var);
        if (config.head.task == Task::Segmentation) {
            const auto predicted = masked_argmax(logits, allowed_labels(config, sample.category));
            for (std::size_t i = 0; i < predicted.size(); ++i) {
                *correct += predicted[i] == sample.part_labels[i];
            }
            *total += static_cast<int>(predicted.size());
        } else {
            *correct += masked_argmax(logits, {}).front() == sample.category;
            *total += 1;
        }
    }
    tape.backward(loss, weight);
    return value;
}

std::vector<std::size_t> epoch_order(std::size_t size, std::uint64_t seed, int epoch)
{
    std::vector<std::size_t> order(size);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(epoch + 1)));
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

std::vector<EpochRecord> train(TrainState& state, const Dataset& dataset, const ModelConfig& model_config,
                               const TrainConfig& config, const EpochCallback& on_epoch)
{
    validate_config(model_config);
    check_param_shapes(model_config, state.params);
    if (dataset.empty()) {
        throw ArgumentError("training dataset is empty");
    }
    if (config.epochs < 0 || config.batch <= 0 || !(config.learning_rate > 0.0)) {
        throw ArgumentError("epochs, batch size and learning rate must be positive");
    }
    for (const auto& sample : dataset) {
        validate_sample(sample, model_config);
    }

    const nn::AdamOptions adam = config.adam();
    std::vector<EpochRecord> history;
    while (state.epoch < config.epochs) {
        const auto order = epoch_order(dataset.size(), config.seed, state.epoch);
        EpochRecord record;
        record.epoch = state.epoch + 1;
        double loss_sum = 0.0;
        int correct = 0;
        int total = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch));
            const double weight = 1.0 / static_cast<double>(end - start);
            for (std::size_t k = start; k < end; ++k) {
                const SampleRecord& sample = dataset[order[k]];
                const double loss =
                    accumulate_sample_gradient(sample, state.params, model_config, weight, &correct, &total);
                if (!std::isfinite(loss)) {
                    throw TrainingError("non-finite loss on sample '" + sample.id + "' in epoch "
                                        + std::to_string(record.epoch));
                }
                loss_sum += loss;
            }
            for (auto& entry : state.params.entries()) {
                nn::adam_step(entry.param, adam);
            }
            ++record.steps;
        }
        record.mean_loss = loss_sum / static_cast<double>(dataset.size());
        record.train_accuracy = total > 0 ? static_cast<double>(correct) / total : 0.0;
        ++state.epoch;
        history.push_back(record);
        if (on_epoch) {
            on_epoch(record, state);
        }
    }
    return history;
}

std::vector<int> predict(const SampleRecord& sample, ModelParams& params, const ModelConfig& config)
{
    Tape tape;
    Var logits = model_forward(tape, sample.features, sample.hierarchy, sample.category, params, config);
    if (config.head.task == Task::Segmentation) {
        return masked_argmax(tape.value(logits), allowed_labels(config, sample.category));
    }
    return masked_argmax(tape.value(logits), {});
}

} // namespace lapnet
