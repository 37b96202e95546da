#include "osp/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "osp/errors.hpp"
#include "osp/parallel.hpp"

namespace osp::rf {

namespace {

// Gains smaller than this are floating-point noise on a mathematically zero
// impurity decrease.
constexpr double kMinGain = 1e-12;

double gini_of(const std::vector<int>& counts, int total) {
    double acc = 0.0;
    const double inv = 1.0 / static_cast<double>(total);
    for (int c : counts) {
        const double f = static_cast<double>(c) * inv;
        acc += f * f;
    }
    return 1.0 - acc;
}

}  // namespace

int ForestParams::resolved_candidates(int n_features) const {
    if (n_candidate_features > 0) return std::min(n_candidate_features, n_features);
    return std::max(1, static_cast<int>(std::sqrt(static_cast<double>(n_features))));
}

double gini_impurity(const std::vector<int>& class_counts) {
    int total = 0;
    for (int c : class_counts) {
        if (c < 0) throw OspError(Errc::InvalidArgument, "negative class count");
        total += c;
    }
    if (total == 0) throw OspError(Errc::EmptyCounts, "gini of empty counts");
    return gini_of(class_counts, total);
}

std::optional<Split> best_split(const Dataset& data, const std::vector<int>& sample_idx,
                                const std::vector<int>& feature_idx) {
    const int n = static_cast<int>(sample_idx.size());
    if (n == 0) throw OspError(Errc::InvalidArgument, "best_split on empty sample set");

    std::vector<int> parent_counts(data.n_classes, 0);
    for (int i : sample_idx) parent_counts[data.labels[i]]++;
    const double parent_gini = gini_of(parent_counts, n);

    std::optional<Split> best;
    std::vector<std::pair<double, int>> column(n);  // (value, label)
    std::vector<int> left_counts(data.n_classes);
    std::vector<int> right_counts(data.n_classes);

    for (int f : feature_idx) {
        for (int i = 0; i < n; ++i) {
            const int s = sample_idx[i];
            column[i] = {data.features[s][f], data.labels[s]};
        }
        std::sort(column.begin(), column.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        std::fill(left_counts.begin(), left_counts.end(), 0);
        right_counts = parent_counts;
        for (int i = 1; i < n; ++i) {
            const int moved = column[i - 1].second;
            left_counts[moved]++;
            right_counts[moved]--;
            const double lo = column[i - 1].first;
            const double hi = column[i].first;
            if (!(lo < hi)) continue;
            double threshold = lo + (hi - lo) / 2.0;
            if (!(threshold < hi)) threshold = lo;  // adjacent doubles: keep split valid

            const double weighted = (static_cast<double>(i) * gini_of(left_counts, i) +
                                     static_cast<double>(n - i) * gini_of(right_counts, n - i)) /
                                    static_cast<double>(n);
            const double gain = parent_gini - weighted;
            if (gain <= kMinGain) continue;
            if (!best || gain > best->gain ||
                (gain == best->gain &&
                 (f < best->feature || (f == best->feature && threshold < best->threshold)))) {
                best = Split{f, threshold, gain};
            }
        }
    }
    return best;
}

namespace {

// Draws k distinct feature indices via partial Fisher-Yates over a
// persistent pool, undoing the swaps afterwards so the pool never needs
// re-initialization.
class FeatureSampler {
public:
    explicit FeatureSampler(int n_features) : pool_(n_features) {
        std::iota(pool_.begin(), pool_.end(), 0);
    }

    std::vector<int> draw(int k, Rng& rng) {
        const int p = static_cast<int>(pool_.size());
        if (k >= p) {
            return pool_;  // all features, ascending; consumes no rng
        }
        std::vector<std::pair<int, int>> swaps;
        swaps.reserve(k);
        for (int i = 0; i < k; ++i) {
            const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(p - i)));
            swaps.emplace_back(i, j);
            std::swap(pool_[i], pool_[j]);
        }
        std::vector<int> out(pool_.begin(), pool_.begin() + k);
        for (auto it = swaps.rbegin(); it != swaps.rend(); ++it) {
            std::swap(pool_[it->first], pool_[it->second]);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    std::vector<int> pool_;
};

TreeNode make_leaf(const Dataset& data, const std::vector<int>& sample_idx) {
    TreeNode leaf;
    leaf.counts.assign(data.n_classes, 0);
    for (int i : sample_idx) leaf.counts[data.labels[i]]++;
    return leaf;
}

bool is_pure(const Dataset& data, const std::vector<int>& sample_idx) {
    const int first = data.labels[sample_idx[0]];
    for (int i : sample_idx) {
        if (data.labels[i] != first) return false;
    }
    return true;
}

TreeNode grow(const Dataset& data, std::vector<int> sample_idx, const ForestParams& params,
              FeatureSampler& sampler, Rng& rng, int depth) {
    if ((params.max_depth >= 0 && depth >= params.max_depth) ||
        static_cast<int>(sample_idx.size()) < params.min_samples_split ||
        is_pure(data, sample_idx)) {
        return make_leaf(data, sample_idx);
    }

    const auto candidates = sampler.draw(params.resolved_candidates(data.n_features()), rng);
    const auto split = best_split(data, sample_idx, candidates);
    if (!split) return make_leaf(data, sample_idx);

    std::vector<int> left_idx;
    std::vector<int> right_idx;
    for (int i : sample_idx) {
        if (data.features[i][split->feature] <= split->threshold) {
            left_idx.push_back(i);
        } else {
            right_idx.push_back(i);
        }
    }
    sample_idx.clear();
    sample_idx.shrink_to_fit();

    TreeNode node;
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = std::make_unique<TreeNode>(
        grow(data, std::move(left_idx), params, sampler, rng, depth + 1));
    node.right = std::make_unique<TreeNode>(
        grow(data, std::move(right_idx), params, sampler, rng, depth + 1));
    return node;
}

}  // namespace

TreeNode fit_tree(const Dataset& data, const std::vector<int>& sample_idx,
                  const ForestParams& params, Rng& rng) {
    if (sample_idx.empty()) throw OspError(Errc::InvalidArgument, "fit_tree on empty sample set");
    FeatureSampler sampler(data.n_features());
    return grow(data, sample_idx, params, sampler, rng, 0);
}

Rng tree_rng(std::uint64_t seed, int tree) {
    return Rng(mix_seed(seed, static_cast<std::uint64_t>(tree)));
}

std::vector<int> bootstrap_sample(std::uint64_t seed, int tree, int n_samples) {
    Rng rng = tree_rng(seed, tree);
    std::vector<int> idx(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        idx[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_samples)));
    }
    return idx;
}

ForestModel fit_forest(const Dataset& data, const ForestParams& params, int threads) {
    if (data.n_samples() < 1) throw OspError(Errc::InvalidArgument, "empty dataset");
    if (params.n_trees < 1) throw OspError(Errc::InvalidArgument, "n_trees must be >= 1");
    if (params.min_samples_split < 2) {
        throw OspError(Errc::InvalidArgument, "min_samples_split must be >= 2");
    }
    for (int label : data.labels) {
        if (label < 0 || label >= data.n_classes) {
            throw OspError(Errc::InvalidArgument, "label outside [0, n_classes)");
        }
    }

    ForestModel model;
    model.params = params;
    model.n_classes = data.n_classes;
    model.n_features = data.n_features();
    model.trees.resize(params.n_trees);

    parallel_for_indexed(static_cast<std::size_t>(params.n_trees), threads, [&](std::size_t t) {
        Rng rng = tree_rng(params.seed, static_cast<int>(t));
        std::vector<int> idx;
        if (params.bootstrap) {
            const int n = data.n_samples();
            idx.resize(n);
            for (int i = 0; i < n; ++i) {
                idx[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
            }
        } else {
            idx.resize(data.n_samples());
            std::iota(idx.begin(), idx.end(), 0);
        }
        FeatureSampler sampler(data.n_features());
        model.trees[t] = grow(data, std::move(idx), params, sampler, rng, 0);
    });
    return model;
}

namespace {

int leaf_majority(const TreeNode& leaf) {
    int best = 0;
    for (int c = 1; c < static_cast<int>(leaf.counts.size()); ++c) {
        if (leaf.counts[c] > leaf.counts[best]) best = c;  // ties keep the lower code
    }
    return best;
}

const TreeNode& descend(const TreeNode& node, std::span<const double> row) {
    const TreeNode* cur = &node;
    while (!cur->is_leaf()) {
        cur = row[cur->feature] <= cur->threshold ? cur->left.get() : cur->right.get();
    }
    return *cur;
}

}  // namespace

Prediction predict(const ForestModel& model, std::span<const double> row) {
    if (static_cast<int>(row.size()) != model.n_features) {
        throw OspError(Errc::DimensionMismatch,
                       "row has " + std::to_string(row.size()) + " features, model expects " +
                           std::to_string(model.n_features));
    }
    std::vector<int> votes(model.n_classes, 0);
    for (const auto& tree : model.trees) {
        votes[leaf_majority(descend(tree, row))]++;
    }
    Prediction pred;
    pred.vote_fractions.resize(model.n_classes);
    int best = 0;
    for (int c = 0; c < model.n_classes; ++c) {
        pred.vote_fractions[c] =
            static_cast<double>(votes[c]) / static_cast<double>(model.trees.size());
        if (votes[c] > votes[best]) best = c;
    }
    pred.label = best;
    return pred;
}

std::vector<double> flatten_grid(const sweep::SweepGrid& grid) {
    std::vector<double> row;
    row.reserve(sweep::kGridCells * kNumFrameClasses);
    for (const auto& cell : grid.cells) {
        row.insert(row.end(), cell.begin(), cell.end());
    }
    return row;
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json node_to_json(const TreeNode& node) {
    ordered_json j;
    if (node.is_leaf()) {
        j["type"] = "leaf";
        j["counts"] = node.counts;
    } else {
        j["type"] = "split";
        j["feature"] = node.feature;
        j["threshold"] = node.threshold;
        j["left"] = node_to_json(*node.left);
        j["right"] = node_to_json(*node.right);
    }
    return j;
}

TreeNode node_from_json(const nlohmann::json& j) {
    TreeNode node;
    const std::string type = j.at("type").get<std::string>();
    if (type == "leaf") {
        node.counts = j.at("counts").get<std::vector<int>>();
    } else if (type == "split") {
        node.feature = j.at("feature").get<int>();
        node.threshold = j.at("threshold").get<double>();
        node.left = std::make_unique<TreeNode>(node_from_json(j.at("left")));
        node.right = std::make_unique<TreeNode>(node_from_json(j.at("right")));
    } else {
        throw OspError(Errc::BadFormat, "unknown node type '" + type + "'");
    }
    return node;
}

}  // namespace

std::string forest_to_json_string(const ForestModel& model) {
    ordered_json j;
    j["format"] = "rf-v1";
    j["n_classes"] = model.n_classes;
    j["n_features"] = model.n_features;
    ordered_json p;
    p["n_trees"] = model.params.n_trees;
    if (model.params.max_depth < 0) {
        p["max_depth"] = nullptr;
    } else {
        p["max_depth"] = model.params.max_depth;
    }
    p["min_samples_split"] = model.params.min_samples_split;
    if (model.params.n_candidate_features <= 0) {
        p["n_candidate_features"] = "sqrt";
    } else {
        p["n_candidate_features"] = model.params.n_candidate_features;
    }
    p["bootstrap"] = model.params.bootstrap;
    p["seed"] = model.params.seed;
    j["params"] = std::move(p);
    ordered_json trees = ordered_json::array();
    for (const auto& t : model.trees) trees.push_back(node_to_json(t));
    j["trees"] = std::move(trees);
    return j.dump() + "\n";
}

ForestModel forest_from_json_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw OspError(Errc::BadFormat, std::string("model JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "rf-v1") {
            throw OspError(Errc::BadFormat, "expected format rf-v1");
        }
        ForestModel model;
        model.n_classes = j.at("n_classes").get<int>();
        model.n_features = j.at("n_features").get<int>();
        const auto& p = j.at("params");
        model.params.n_trees = p.at("n_trees").get<int>();
        model.params.max_depth =
            p.at("max_depth").is_null() ? -1 : p.at("max_depth").get<int>();
        model.params.min_samples_split = p.at("min_samples_split").get<int>();
        model.params.n_candidate_features = p.at("n_candidate_features").is_string()
                                                ? 0
                                                : p.at("n_candidate_features").get<int>();
        model.params.bootstrap = p.at("bootstrap").get<bool>();
        model.params.seed = p.at("seed").get<std::uint64_t>();
        for (const auto& t : j.at("trees")) {
            model.trees.push_back(node_from_json(t));
        }
        if (model.trees.empty()) throw OspError(Errc::BadFormat, "model has no trees");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw OspError(Errc::BadFormat, std::string("model JSON: ") + e.what());
    }
}

void save_forest(const std::filesystem::path& path, const ForestModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw OspError(Errc::IoFailure, "cannot open " + path.string());
    out << forest_to_json_string(model);
    if (!out) throw OspError(Errc::IoFailure, "write failed: " + path.string());
}

ForestModel load_forest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw OspError(Errc::MissingFile, path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return forest_from_json_string(text);
}

}  // namespace osp::rf
