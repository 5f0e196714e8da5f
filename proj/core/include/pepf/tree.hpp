#pragma once

#include "pepf/dataset.hpp"
#include "pepf/random.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pepf::learners {

struct TreeParams {
    std::size_t max_depth = 12;
    std::size_t min_leaf = 1;
    /// Features examined per split; 0 or >= width means all of them.
    std::size_t features_per_split = 0;
};

/// CART regression tree with exact variance-reduction splits. Leaves keep the
/// training rows that reached them so the tree can serve quantile forests.
class RegressionTree {
public:
    /// `sample` lists training row indices, repeated for bootstrap multiplicity.
    static RegressionTree fit(const dataset::FeatureRows& features, std::span<const double> targets,
                              std::span<const std::size_t> sample, const TreeParams& params,
                              Rng& rng);

    double predict(std::span<const double> row) const;
    std::size_t leaf_of(std::span<const double> row) const;

    /// Training row indices (with multiplicity) stored in a leaf.
    std::span<const std::size_t> leaf_rows(std::size_t leaf) const;

    std::size_t leaf_count() const noexcept { return leaf_offsets_.size() - 1; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t depth() const noexcept { return depth_; }

private:
    struct Node {
        std::int32_t feature = -1;  ///< -1 marks a leaf
        double threshold = 0.0;
        std::uint32_t left = 0;
        std::uint32_t right = 0;
        double value = 0.0;
        std::uint32_t leaf = 0;
    };

    std::uint32_t grow(const dataset::FeatureRows& features, std::span<const double> targets,
                       std::vector<std::size_t>& rows, std::size_t depth, const TreeParams& params,
                       Rng& rng, std::vector<std::vector<std::size_t>>& leaves);
    const Node& descend(std::span<const double> row) const;

    std::vector<Node> nodes_;
    std::vector<std::size_t> leaf_offsets_{0};
    std::vector<std::size_t> leaf_storage_;
    std::size_t width_ = 0;
    std::size_t depth_ = 0;
};

} // namespace pepf::learners
