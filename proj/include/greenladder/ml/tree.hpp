#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "greenladder/error.hpp"
#include "greenladder/ml/features.hpp"

namespace greenladder::ml {

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    double value = 0; // mean target of the node's samples

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeParams {
    int max_depth = -1; // -1: unlimited
    int min_samples_split = 2;
    int min_samples_leaf = 1;
    int max_leaves = -1; // -1: unlimited; only meaningful with best_first
    bool best_first = false;
};

/// CART regression tree, variance-reduction splits, x[f] <= threshold goes left.
class RegressionTree {
public:
    RegressionTree() = default;
    explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    double predict(const FeatureRow& x) const {
        int i = 0;
        while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
            const auto& n = nodes_[static_cast<std::size_t>(i)];
            i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return nodes_[static_cast<std::size_t>(i)].value;
    }

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    std::size_t leaf_count() const {
        return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.is_leaf(); }));
    }
    int depth() const { return depth_of(0); }

    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

private:
    int depth_of(int i) const {
        const auto& n = nodes_[static_cast<std::size_t>(i)];
        return n.is_leaf() ? 0 : 1 + std::max(depth_of(n.left), depth_of(n.right));
    }

    std::vector<TreeNode> nodes_;
};

namespace detail {

/// Grows one tree over a (possibly repeating) list of row indices.
///
/// Positions 0..m-1 refer to sample[pos]. Each feature keeps the positions
/// presorted by value; a node owns the same [begin, end) range in all three
/// orders and splits are applied by stable partitioning every order.
class TreeGrower {
public:
    TreeGrower(std::span<const FeatureRow> X, std::span<const double> y, std::span<const std::size_t> sample,
               const TreeParams& params)
        : X_(X), y_(y), sample_(sample), params_(params), goes_left_(sample.size()), buffer_(sample.size()) {
        const std::size_t m = sample.size();
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            auto& ord = order_[f];
            ord.resize(m);
            std::iota(ord.begin(), ord.end(), std::size_t{0});
            std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return value(a, f) < value(b, f); });
        }
    }

    RegressionTree grow() {
        std::vector<TreeNode> nodes;
        if (sample_.empty()) throw Error(ErrorCode::TooFewSamples, "tree needs at least one sample");
        nodes.push_back(TreeNode{});
        Work root{0, 0, sample_.size(), 0};
        nodes[0].value = mean(root.begin, root.end);

        if (params_.best_first) {
            auto cmp = [](const Candidate& a, const Candidate& b) {
                return a.split.gain < b.split.gain || (a.split.gain == b.split.gain && a.work.node > b.work.node);
            };
            std::priority_queue<Candidate, std::vector<Candidate>, decltype(cmp)> heap(cmp);
            std::size_t leaves = 1;
            auto push = [&](const Work& w) {
                if (auto s = best_split(w)) heap.push(Candidate{w, *s});
            };
            push(root);
            while (!heap.empty() && (params_.max_leaves < 0 || leaves < static_cast<std::size_t>(params_.max_leaves))) {
                Candidate c = heap.top();
                heap.pop();
                auto [l, r] = apply_split(c.work, c.split, nodes);
                ++leaves;
                push(l);
                push(r);
            }
        } else {
            std::vector<Work> stack{root};
            while (!stack.empty()) {
                Work w = stack.back();
                stack.pop_back();
                if (auto s = best_split(w)) {
                    auto [l, r] = apply_split(w, *s, nodes);
                    stack.push_back(r);
                    stack.push_back(l);
                }
            }
        }
        return RegressionTree(std::move(nodes));
    }

private:
    struct Work {
        int node;
        std::size_t begin;
        std::size_t end;
        int depth;
    };
    struct Split {
        std::size_t feature;
        double threshold;
        double gain;
    };
    struct Candidate {
        Work work;
        Split split;
    };

    double value(std::size_t pos, std::size_t f) const { return X_[sample_[pos]][f]; }
    double target(std::size_t pos) const { return y_[sample_[pos]]; }

    double mean(std::size_t b, std::size_t e) const {
        double s = 0;
        for (std::size_t i = b; i < e; ++i) s += target(order_[0][i]);
        return s / static_cast<double>(e - b);
    }

    std::optional<Split> best_split(const Work& w) const {
        const std::size_t n = w.end - w.begin;
        if (params_.max_depth >= 0 && w.depth >= params_.max_depth) return std::nullopt;
        if (n < static_cast<std::size_t>(std::max(2, params_.min_samples_split))) return std::nullopt;
        const auto min_leaf = static_cast<std::size_t>(std::max(1, params_.min_samples_leaf));
        if (n < 2 * min_leaf) return std::nullopt;

        double total = 0, sumsq = 0;
        for (std::size_t i = w.begin; i < w.end; ++i) {
            const double t = target(order_[0][i]);
            total += t;
            sumsq += t * t;
        }
        const double parent = total * total / static_cast<double>(n);

        std::optional<Split> best;
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            const auto& ord = order_[f];
            double left = 0;
            for (std::size_t i = w.begin; i + 1 < w.end; ++i) {
                left += target(ord[i]);
                const std::size_t nl = i + 1 - w.begin;
                const std::size_t nr = n - nl;
                if (nl < min_leaf) continue;
                if (nr < min_leaf) break;
                const double lo = value(ord[i], f);
                const double hi = value(ord[i + 1], f);
                if (!(lo < hi)) continue;
                const double right = total - left;
                const double gain = left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr) - parent;
                if (!best || gain > best->gain) {
                    double thr = lo + (hi - lo) / 2.0;
                    if (!(thr < hi)) thr = lo;
                    best = Split{f, thr, gain};
                }
            }
        }
        // Relative floor so round-off never produces a split on constant targets.
        if (best && !(best->gain > 1e-12 * sumsq)) return std::nullopt;
        return best;
    }

    std::pair<Work, Work> apply_split(const Work& w, const Split& s, std::vector<TreeNode>& nodes) {
        std::size_t n_left = 0;
        for (std::size_t i = w.begin; i < w.end; ++i) {
            const std::size_t pos = order_[0][i];
            goes_left_[pos] = value(pos, s.feature) <= s.threshold;
            n_left += goes_left_[pos] ? 1 : 0;
        }
        for (auto& ord : order_) {
            std::size_t l = w.begin, r = w.begin + n_left;
            for (std::size_t i = w.begin; i < w.end; ++i) {
                const std::size_t pos = ord[i];
                buffer_[goes_left_[pos] ? l++ : r++] = pos;
            }
            std::copy(buffer_.begin() + static_cast<std::ptrdiff_t>(w.begin),
                      buffer_.begin() + static_cast<std::ptrdiff_t>(w.end),
                      ord.begin() + static_cast<std::ptrdiff_t>(w.begin));
        }

        const int li = static_cast<int>(nodes.size());
        const int ri = li + 1;
        Work lw{li, w.begin, w.begin + n_left, w.depth + 1};
        Work rw{ri, w.begin + n_left, w.end, w.depth + 1};
        nodes.push_back(TreeNode{-1, 0, -1, -1, mean(lw.begin, lw.end)});
        nodes.push_back(TreeNode{-1, 0, -1, -1, mean(rw.begin, rw.end)});
        auto& parent = nodes[static_cast<std::size_t>(w.node)];
        parent.feature = static_cast<int>(s.feature);
        parent.threshold = s.threshold;
        parent.left = li;
        parent.right = ri;
        return {lw, rw};
    }

    std::span<const FeatureRow> X_;
    std::span<const double> y_;
    std::span<const std::size_t> sample_;
    TreeParams params_;
    std::array<std::vector<std::size_t>, kNumFeatures> order_;
    std::vector<char> goes_left_;
    std::vector<std::size_t> buffer_;
};

} // namespace detail

inline RegressionTree fit_tree(std::span<const FeatureRow> X, std::span<const double> y,
                               std::span<const std::size_t> sample, const TreeParams& params) {
    return detail::TreeGrower(X, y, sample, params).grow();
}

inline RegressionTree fit_tree(std::span<const FeatureRow> X, std::span<const double> y, const TreeParams& params) {
    std::vector<std::size_t> all(X.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return fit_tree(X, y, all, params);
}

} // namespace greenladder::ml
