#include "pepf/tree.hpp"

#include "pepf/error.hpp"

#include <algorithm>
#include <numeric>

namespace pepf::learners {

RegressionTree RegressionTree::fit(const dataset::FeatureRows& features,
                                   std::span<const double> targets,
                                   std::span<const std::size_t> sample, const TreeParams& params,
                                   Rng& rng) {
    if (sample.empty()) throw DataError("cannot grow a tree on an empty sample");
    if (features.rows() != targets.size()) throw ShapeError("feature rows differ from targets");
    if (params.min_leaf == 0) throw ConfigError("min_leaf must be >= 1");

    RegressionTree tree;
    tree.width_ = features.cols();
    std::vector<std::size_t> rows(sample.begin(), sample.end());
    std::vector<std::vector<std::size_t>> leaves;
    tree.grow(features, targets, rows, 0, params, rng, leaves);
    for (auto& leaf : leaves) {
        tree.leaf_storage_.insert(tree.leaf_storage_.end(), leaf.begin(), leaf.end());
        tree.leaf_offsets_.push_back(tree.leaf_storage_.size());
    }
    return tree;
}

std::uint32_t RegressionTree::grow(const dataset::FeatureRows& features,
                                   std::span<const double> targets,
                                   std::vector<std::size_t>& rows, std::size_t depth,
                                   const TreeParams& params, Rng& rng,
                                   std::vector<std::vector<std::size_t>>& leaves) {
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    depth_ = std::max(depth_, depth);

    const std::size_t n = rows.size();
    double sum = 0.0;
    for (const auto r : rows) sum += targets[r];
    nodes_[index].value = sum / static_cast<double>(n);

    const auto make_leaf = [&] {
        nodes_[index].feature = -1;
        nodes_[index].leaf = static_cast<std::uint32_t>(leaves.size());
        leaves.push_back(std::move(rows));
        return index;
    };

    const bool constant = std::all_of(rows.begin(), rows.end(), [&](std::size_t r) {
        return targets[r] == targets[rows.front()];
    });
    if (depth >= params.max_depth || n < 2 * params.min_leaf || constant) return make_leaf();

    // Candidate features: all, or a partial Fisher-Yates draw.
    const std::size_t width = features.cols();
    std::vector<std::size_t> candidates(width);
    std::iota(candidates.begin(), candidates.end(), 0);
    std::size_t take = width;
    if (params.features_per_split > 0 && params.features_per_split < width) {
        take = params.features_per_split;
        for (std::size_t i = 0; i < take; ++i)
            std::swap(candidates[i], candidates[i + uniform_index(rng, width - i)]);
    }

    const double parent_score = sum * sum / static_cast<double>(n);
    double best_gain = 1e-12 * std::max(1.0, std::abs(parent_score));
    std::int32_t best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::size_t> order(n);
    for (std::size_t c = 0; c < take; ++c) {
        const std::size_t f = candidates[c];
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return features(rows[a], f) < features(rows[b], f);
        });
        double left_sum = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left_sum += targets[rows[order[i]]];
            const std::size_t left_n = i + 1;
            const std::size_t right_n = n - left_n;
            const double here = features(rows[order[i]], f);
            const double next = features(rows[order[i + 1]], f);
            if (!(here < next)) continue;
            if (left_n < params.min_leaf) continue;
            if (right_n < params.min_leaf) break;
            const double right_sum = sum - left_sum;
            const double gain = left_sum * left_sum / static_cast<double>(left_n) +
                                right_sum * right_sum / static_cast<double>(right_n) - parent_score;
            if (gain > best_gain) {
                best_gain = gain;
                best_feature = static_cast<std::int32_t>(f);
                best_threshold = here + 0.5 * (next - here);
                if (!(best_threshold < next)) best_threshold = here;
            }
        }
    }
    if (best_feature < 0) return make_leaf();

    std::vector<std::size_t> left_rows, right_rows;
    for (const auto r : rows)
        (features(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_rows
                                                                                : right_rows)
            .push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    nodes_[index].feature = best_feature;
    nodes_[index].threshold = best_threshold;
    const auto left = grow(features, targets, left_rows, depth + 1, params, rng, leaves);
    const auto right = grow(features, targets, right_rows, depth + 1, params, rng, leaves);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
}

const RegressionTree::Node& RegressionTree::descend(std::span<const double> row) const {
    if (row.size() != width_)
        throw ShapeError("row width " + std::to_string(row.size()) + " differs from tree width " +
                         std::to_string(width_));
    const Node* node = &nodes_.front();
    while (node->feature >= 0)
        node = &nodes_[row[static_cast<std::size_t>(node->feature)] <= node->threshold
                           ? node->left
                           : node->right];
    return *node;
}

double RegressionTree::predict(std::span<const double> row) const { return descend(row).value; }

std::size_t RegressionTree::leaf_of(std::span<const double> row) const {
    return descend(row).leaf;
}

std::span<const std::size_t> RegressionTree::leaf_rows(std::size_t leaf) const {
    return std::span<const std::size_t>(leaf_storage_)
        .subspan(leaf_offsets_[leaf], leaf_offsets_[leaf + 1] - leaf_offsets_[leaf]);
}

} // namespace pepf::learners
