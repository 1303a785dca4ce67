#include <lapnet/training.hpp>

#include <map>
#include <set>

namespace lapnet {

double shape_iou(const std::vector<int>& predicted, const std::vector<int>& truth, const std::vector<int>& parts)
{
    if (predicted.size() != truth.size()) {
        throw ArgumentError("prediction and ground truth lengths differ");
    }
    if (parts.empty()) {
        return 1.0;
    }
    double sum = 0.0;
    for (int part : parts) {
        long long inter = 0;
        long long uni = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool p = predicted[i] == part;
            const bool t = truth[i] == part;
            inter += p && t;
            uni += p || t;
        }
        sum += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    return sum / static_cast<double>(parts.size());
}

Metrics segmentation_metrics(const std::vector<std::vector<int>>& predictions, const Dataset& dataset,
                             const ModelConfig& config)
{
    if (predictions.size() != dataset.size()) {
        throw ArgumentError("one prediction per sample is required");
    }
    std::map<int, CategoryMetrics> rows;
    std::map<int, double> iou_sums;
    for (std::size_t s = 0; s < dataset.size(); ++s) {
        const auto& sample = dataset[s];
        auto& row = rows[sample.category];
        row.category = sample.category;
        ++row.samples;
        row.vertices += static_cast<long long>(sample.part_labels.size());
        for (std::size_t i = 0; i < sample.part_labels.size(); ++i) {
            row.correct += predictions[s][i] == sample.part_labels[i];
        }

        std::vector<int> parts;
        if (!config.head.category_labels.empty()) {
            parts = config.head.category_labels.at(sample.category);
        } else {
            parts.resize(config.head.num_labels);
            for (int l = 0; l < config.head.num_labels; ++l) {
                parts[l] = l;
            }
        }
        iou_sums[sample.category] += shape_iou(predictions[s], sample.part_labels, parts);
    }

    Metrics m;
    long long vertices = 0;
    long long correct = 0;
    double iou_sum = 0.0;
    for (auto& [category, row] : rows) {
        row.accuracy = row.vertices > 0 ? static_cast<double>(row.correct) / static_cast<double>(row.vertices) : 0.0;
        row.iou = iou_sums[category] / row.samples;
        vertices += row.vertices;
        correct += row.correct;
        iou_sum += row.iou * row.samples;
        m.samples += row.samples;
        m.per_category.push_back(row);
    }
    m.accuracy = vertices > 0 ? static_cast<double>(correct) / static_cast<double>(vertices) : 0.0;
    m.iou = m.samples > 0 ? iou_sum / m.samples : 0.0;
    return m;
}

Metrics classification_metrics(const std::vector<int>& predictions, const Dataset& dataset)
{
    if (predictions.size() != dataset.size()) {
        throw ArgumentError("one prediction per sample is required");
    }
    std::map<int, CategoryMetrics> rows;
    for (std::size_t s = 0; s < dataset.size(); ++s) {
        auto& row = rows[dataset[s].category];
        row.category = dataset[s].category;
        ++row.samples;
        row.vertices += dataset[s].num_vertices();
        row.correct += predictions[s] == dataset[s].category;
    }
    Metrics m;
    long long correct = 0;
    for (auto& [category, row] : rows) {
        row.accuracy = static_cast<double>(row.correct) / row.samples;
        correct += row.correct;
        m.samples += row.samples;
        m.per_category.push_back(row);
    }
    m.accuracy = m.samples > 0 ? static_cast<double>(correct) / m.samples : 0.0;
    return m;
}

Metrics evaluate_segmentation(ModelParams& params, const ModelConfig& config, const Dataset& dataset)
{
    std::vector<std::vector<int>> predictions;
    predictions.reserve(dataset.size());
    for (const auto& sample : dataset) {
        validate_sample(sample, config);
        predictions.push_back(predict(sample, params, config));
    }
    return segmentation_metrics(predictions, dataset, config);
}

Metrics evaluate_classification(ModelParams& params, const ModelConfig& config, const Dataset& dataset)
{
    std::vector<int> predictions;
    predictions.reserve(dataset.size());
    for (const auto& sample : dataset) {
        validate_sample(sample, config);
        predictions.push_back(predict(sample, params, config).front());
    }
    return classification_metrics(predictions, dataset);
}

} // namespace lapnet
