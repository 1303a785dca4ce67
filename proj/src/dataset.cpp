#include <lapnet/training.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace lapnet {

DatasetSplit split_dataset(const std::vector<int>& categories, const std::vector<double>& ratios, std::uint64_t seed)
{
    if (ratios.size() != 2) {
        throw ArgumentError("split ratios must be {train, test}");
    }
    for (double r : ratios) {
        if (!(r >= 0.0)) {
            throw ArgumentError("split ratios must be non-negative");
        }
    }
    if (std::abs(ratios[0] + ratios[1] - 1.0) > 1e-9) {
        throw ArgumentError("split ratios must sum to 1");
    }
    const auto nonempty_splits = static_cast<std::size_t>(std::count_if(ratios.begin(), ratios.end(), [](double r) {
        return r > 0.0;
    }));

    std::map<int, std::vector<std::size_t>> by_category;
    for (std::size_t i = 0; i < categories.size(); ++i) {
        by_category[categories[i]].push_back(i);
    }

    DatasetSplit split;
    for (auto& [category, members] : by_category) {
        if (members.size() < nonempty_splits) {
            throw ArgumentError("category " + std::to_string(category) + " has " + std::to_string(members.size())
                                + " samples; cannot fill " + std::to_string(nonempty_splits) + " splits");
        }
        std::mt19937_64 rng(seed ^ (0xbf58476d1ce4e5b9ULL * static_cast<std::uint64_t>(category + 1)));
        std::shuffle(members.begin(), members.end(), rng);
        auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(members.size())));
        // Keep every non-empty split populated.
        if (ratios[1] > 0.0 && n_train == members.size()) {
            --n_train;
        }
        if (ratios[0] > 0.0 && n_train == 0) {
            n_train = 1;
        }
        split.train.insert(split.train.end(), members.begin(), members.begin() + n_train);
        split.test.insert(split.test.end(), members.begin() + n_train, members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

Dataset subset(const Dataset& dataset, const std::vector<std::size_t>& indices)
{
    Dataset out;
    out.reserve(indices.size());
    for (std::size_t i : indices) {
        out.push_back(dataset.at(i));
    }
    return out;
}

} // namespace lapnet
