// Second-order gradient boosting on the binary logistic loss with exact
// greedy regression trees grown level by level over presorted columns.

#include "learner_common.hpp"

namespace adbench {

namespace {

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

struct NodeStats {
    double g = 0.0;
    double h = 0.0;
};

/// Per-(node, feature) scan state while walking one presorted column.
struct ScanState {
    double g_left = 0.0;
    double h_left = 0.0;
    double last = 0.0;
    bool has_last = false;
};

class TreeBuilder {
public:
    TreeBuilder(const detail::Dataset& data, const std::vector<std::vector<std::size_t>>& sorted,
                const LearnerParams& params)
        : data_(data), sorted_(sorted), params_(params), node_of_(data.rows) {}

    /// Grows one tree on (grad, hess); fills `leaf_of` with each row's leaf.
    Tree grow(const std::vector<double>& grad, const std::vector<double>& hess, std::vector<int>& leaf_of) {
        Tree tree(1);
        std::fill(node_of_.begin(), node_of_.end(), 0);
        std::vector<int> frontier{0};
        const double lambda = params_.gbrt_lambda;
        const double mcw = params_.gbrt_min_child_weight;

        for (int depth = 0; !frontier.empty(); ++depth) {
            std::vector<NodeStats> stats(tree.size());
            for (std::size_t r = 0; r < data_.rows; ++r) {
                stats[node_of_[r]].g += grad[r];
                stats[node_of_[r]].h += hess[r];
            }
            std::vector<char> searching(tree.size(), 0);
            bool any = false;
            if (depth < params_.gbrt_max_depth) {
                for (int node : frontier) {
                    // Both children need hessian >= mcw.
                    if (stats[node].h >= 2.0 * mcw) {
                        searching[node] = 1;
                        any = true;
                    }
                }
            }

            std::vector<SplitCandidate> best(tree.size());
            if (any) {
                std::vector<ScanState> scan(tree.size());
                for (std::size_t f = 0; f < data_.dims; ++f) {
                    std::fill(scan.begin(), scan.end(), ScanState{});
                    for (std::size_t r : sorted_[f]) {
                        const int node = node_of_[r];
                        if (!searching[node]) continue;
                        ScanState& st = scan[node];
                        const double v = data_.at(r, f);
                        if (st.has_last && v != st.last) {
                            const NodeStats& tot = stats[node];
                            const double g_right = tot.g - st.g_left;
                            const double h_right = tot.h - st.h_left;
                            if (st.h_left >= mcw && h_right >= mcw) {
                                const double gain =
                                    0.5 * (st.g_left * st.g_left / (st.h_left + lambda) +
                                           g_right * g_right / (h_right + lambda) - tot.g * tot.g / (tot.h + lambda));
                                if (gain > best[node].gain) {
                                    best[node] = {gain, static_cast<int>(f), st.last + (v - st.last) / 2.0};
                                }
                            }
                        }
                        st.g_left += grad[r];
                        st.h_left += hess[r];
                        st.last = v;
                        st.has_last = true;
                    }
                }
            }

            std::vector<int> next;
            for (int node : frontier) {
                if (searching[node] && best[node].feature >= 0) {
                    const int left = static_cast<int>(tree.size());
                    tree.emplace_back();
                    tree.emplace_back();
                    TreeNode& n = tree[node];
                    n.feature = best[node].feature;
                    n.threshold = best[node].threshold;
                    n.left = left;
                    n.right = left + 1;
                    next.push_back(left);
                    next.push_back(left + 1);
                } else {
                    tree[node].weight = -stats[node].g / (stats[node].h + lambda);
                }
            }
            if (next.empty()) break;
            for (std::size_t r = 0; r < data_.rows; ++r) {
                const TreeNode& n = tree[node_of_[r]];
                if (!n.is_leaf()) node_of_[r] = data_.at(r, n.feature) < n.threshold ? n.left : n.right;
            }
            frontier = std::move(next);
        }
        leaf_of.assign(node_of_.begin(), node_of_.end());
        return tree;
    }

private:
    const detail::Dataset& data_;
    const std::vector<std::vector<std::size_t>>& sorted_;
    const LearnerParams& params_;
    std::vector<int> node_of_;
};

double mean_log_loss(const std::vector<double>& margin, const std::vector<int>& y) {
    double total = 0.0;
    for (std::size_t r = 0; r < y.size(); ++r) total += detail::softplus(y[r] ? -margin[r] : margin[r]);
    return total / static_cast<double>(y.size());
}

}  // namespace

BoostedEnsemble train_gbrt(const FeatureMatrix& x, std::span<const int> y, const LearnerParams& params,
                           TrainingTrace* trace) {
    validate_params(params);
    const detail::Dataset data = detail::canonical_dataset(x, y);
    BoostedEnsemble model;
    model.learning_rate = params.gbrt_lr;
    model.dims = data.dims;
    model.base_score =
        detail::clamped_log_odds(static_cast<double>(data.positives) / static_cast<double>(data.rows));

    std::vector<double> margin(data.rows, model.base_score);
    if (trace) trace->objective.push_back(mean_log_loss(margin, data.y));
    if (data.positives == 0 || data.positives == data.rows) {
        if (trace) trace->converged = true;
        return model;
    }

    std::vector<std::vector<std::size_t>> sorted(data.dims, std::vector<std::size_t>(data.rows));
    for (std::size_t f = 0; f < data.dims; ++f) {
        auto& idx = sorted[f];
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return data.at(a, f) < data.at(b, f); });
    }

    TreeBuilder builder(data, sorted, params);
    std::vector<double> grad(data.rows), hess(data.rows);
    std::vector<int> leaf_of;
    for (int round = 0; round < params.gbrt_n_estimators; ++round) {
        for (std::size_t r = 0; r < data.rows; ++r) {
            const double p = detail::sigmoid(margin[r]);
            grad[r] = p - data.y[r];
            hess[r] = p * (1.0 - p);
        }
        Tree tree = builder.grow(grad, hess, leaf_of);
        for (std::size_t r = 0; r < data.rows; ++r) margin[r] += params.gbrt_lr * tree[leaf_of[r]].weight;
        model.trees.push_back(std::move(tree));
        if (trace) trace->objective.push_back(mean_log_loss(margin, data.y));
    }
    if (trace) {
        trace->iterations = params.gbrt_n_estimators;
        trace->converged = true;
    }
    return model;
}

double BoostedEnsemble::margin(std::span<const double> x) const {
    double sum = 0.0;
    for (const auto& tree : trees) {
        int node = 0;
        while (!tree[node].is_leaf()) {
            const auto& n = tree[node];
            node = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
        }
        sum += tree[node].weight;
    }
    return base_score + learning_rate * sum;
}

int tree_depth(const Tree& tree) {
    // Nodes are appended after their parent, so one forward pass suffices.
    std::vector<int> depth(tree.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        if (tree[i].is_leaf()) continue;
        depth[tree[i].left] = depth[tree[i].right] = depth[i] + 1;
        deepest = std::max(deepest, depth[i] + 1);
    }
    return deepest;
}

double log_loss(const BoostedEnsemble& model, const FeatureMatrix& x, std::span<const int> y) {
    std::vector<double> margin(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) margin[r] = model.margin(x.row(r));
    return mean_log_loss(margin, std::vector<int>(y.begin(), y.end()));
}

}  // namespace adbench
