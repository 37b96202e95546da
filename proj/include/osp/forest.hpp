#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "osp/rng.hpp"
#include "osp/sweep.hpp"

namespace osp::rf {

struct Dataset {
    std::vector<std::vector<double>> features;  // n_samples x n_features
    std::vector<int> labels;                    // class codes in [0, n_classes)
    int n_classes = 2;

    int n_samples() const { return static_cast<int>(features.size()); }
    int n_features() const { return features.empty() ? 0 : static_cast<int>(features[0].size()); }
};

// Leaf iff feature < 0; internal nodes route feature <= threshold to left.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    std::unique_ptr<TreeNode> left;
    std::unique_ptr<TreeNode> right;
    std::vector<int> counts;  // per-class sample counts, leaves only

    bool is_leaf() const { return feature < 0; }
};

struct ForestParams {
    int n_trees = 100;
    int max_depth = -1;            // -1 = unlimited; 0 = root leaf only
    int min_samples_split = 2;
    int n_candidate_features = 0;  // 0 = sqrt(n_features)
    bool bootstrap = true;
    std::uint64_t seed = 42;

    int resolved_candidates(int n_features) const;
};

struct ForestModel {
    std::vector<TreeNode> trees;
    ForestParams params;
    int n_classes = 2;
    int n_features = 0;
};

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

struct Prediction {
    int label = 0;
    std::vector<double> vote_fractions;
};

// 1 - sum_i (c_i / sum)^2
double gini_impurity(const std::vector<int>& class_counts);

// Exhaustive CART search over the candidate features, thresholds at
// midpoints between consecutive distinct sorted values. Ties break toward
// the lower feature index, then the lower threshold. Gains below 1e-12 are
// treated as zero, so nullopt means no real impurity decrease exists.
std::optional<Split> best_split(const Dataset& data, const std::vector<int>& sample_idx,
                                const std::vector<int>& feature_idx);

TreeNode fit_tree(const Dataset& data, const std::vector<int>& sample_idx,
                  const ForestParams& params, Rng& rng);

// Tree t consumes the stream Rng(mix_seed(seed, t)): bootstrap draws first
// (when enabled), then node-level feature sampling in pre-order. The result
// is identical whether trees train serially or in parallel.
ForestModel fit_forest(const Dataset& data, const ForestParams& params, int threads = 0);

Prediction predict(const ForestModel& model, std::span<const double> row);

// The exact per-tree stream and bootstrap sample fit_forest uses, exposed so
// out-of-bag evaluation can be reproduced externally.
Rng tree_rng(std::uint64_t seed, int tree);
std::vector<int> bootstrap_sample(std::uint64_t seed, int tree, int n_samples);

// Grid cells flattened to a 6*100*5 = 3000 feature row in (sweep, position,
// class code) order.
std::vector<double> flatten_grid(const sweep::SweepGrid& grid);

// "rf-v1" JSON model files.
std::string forest_to_json_string(const ForestModel& model);
ForestModel forest_from_json_string(const std::string& text);
void save_forest(const std::filesystem::path& path, const ForestModel& model);
ForestModel load_forest(const std::filesystem::path& path);

}  // namespace osp::rf
