#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "calib/dataset.hpp"
#include "calib/error.hpp"
#include "calib/parallel.hpp"
#include "calib/rng.hpp"

namespace calib {

/// Random forest configuration. mtry = 0 means "tune before fitting" in the
/// harness and "floor(sqrt(p))" when fitting directly.
struct ForestSpec {
    std::size_t ntree = 500;
    std::size_t mtry = 0;
    std::size_t min_node = 1;  // grow until pure or unsplittable
    std::uint64_t seed = 0;
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = 0;
    std::int32_t right = 0;
    std::uint8_t leaf_vote = 0;  // majority class, ties to negative
};

struct Tree {
    std::vector<TreeNode> nodes;
    std::vector<std::uint32_t> bootstrap_counts;  // per training row

    bool vote(std::span<const double> x) const {
        std::int32_t at = 0;
        while (nodes[at].feature >= 0)
            at = x[static_cast<std::size_t>(nodes[at].feature)] <=
                         nodes[at].threshold
                     ? nodes[at].left
                     : nodes[at].right;
        return nodes[at].leaf_vote != 0;
    }
};

/// Per-training-sample out-of-bag score: the vote fraction over trees whose
/// bootstrap excluded the sample. NaN when no tree excluded it.
struct OobScores {
    std::vector<double> scores;
    std::vector<std::size_t> n_oob_trees;

    bool defined(std::size_t i) const { return n_oob_trees[i] > 0; }
};

struct ForestModel {
    std::vector<Tree> trees;
    std::size_t n_features = 0;

    /// Fraction of trees voting for the positive class.
    double score(std::span<const double> x) const {
        if (x.size() != n_features)
            throw Error("random forest: feature count mismatch");
        std::size_t pos = 0;
        for (const Tree& t : trees)
            if (t.vote(x)) ++pos;
        return static_cast<double>(pos) / static_cast<double>(trees.size());
    }
};

namespace detail {

/// Column-major copy of the training features; tree building is gather
/// heavy per feature, so contiguous columns matter.
struct ColumnMatrix {
    std::vector<double> data;  // column-major
    std::size_t n = 0;

    explicit ColumnMatrix(const Dataset& ds)
        : data(ds.n_samples() * ds.n_features()), n(ds.n_samples()) {
        for (std::size_t i = 0; i < ds.n_samples(); ++i)
            for (std::size_t j = 0; j < ds.n_features(); ++j)
                data[j * n + i] = ds.at(i, j);
    }
    const double* column(std::size_t j) const { return data.data() + j * n; }
};

struct SplitScratch {
    std::vector<double> pos_vals, neg_vals;
    std::vector<std::size_t> feature_pool;
};

/// Nodes near the leaves dominate the split search; insertion sort beats the
/// introsort dispatch for the tiny arrays they produce.
inline void sort_values(std::vector<double>& v) {
    if (v.size() > 24) {
        std::sort(v.begin(), v.end());
        return;
    }
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double x = v[i];
        std::size_t j = i;
        for (; j > 0 && v[j - 1] > x; --j) v[j] = v[j - 1];
        v[j] = x;
    }
}

struct BestSplit {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = -1.0;
};

/// Scans one feature for the split maximizing the Gini improvement
/// (posL^2+negL^2)/nL + (posR^2+negR^2)/nR - (pos^2+neg^2)/n, with
/// candidate thresholds at midpoints between adjacent distinct values.
inline void scan_feature(const ColumnMatrix& cols, const std::vector<int>& labels,
                         const std::vector<std::size_t>& rows, std::size_t lo,
                         std::size_t hi, std::size_t feature,
                         SplitScratch& scratch, BestSplit& best) {
    const double* col = cols.column(feature);
    auto& vp = scratch.pos_vals;
    auto& vn = scratch.neg_vals;
    vp.clear();
    vn.clear();
    for (std::size_t i = lo; i < hi; ++i) {
        const std::size_t r = rows[i];
        (labels[r] == 1 ? vp : vn).push_back(col[r]);
    }
    sort_values(vp);
    sort_values(vn);

    const double n = static_cast<double>(vp.size() + vn.size());
    const double total_pos = static_cast<double>(vp.size());
    const double total_neg = static_cast<double>(vn.size());
    const double parent = (total_pos * total_pos + total_neg * total_neg) / n;

    std::size_t i = 0, j = 0;
    double left_pos = 0.0, left_tot = 0.0, prev = 0.0;
    while (i < vp.size() || j < vn.size()) {
        const double v = (j >= vn.size() || (i < vp.size() && vp[i] <= vn[j]))
                             ? vp[i]
                             : vn[j];
        if (left_tot > 0.0) {  // split between prev distinct value and v
            const double nl = left_tot, nr = n - left_tot;
            const double lp = left_pos, ln = nl - left_pos;
            const double rp = total_pos - left_pos, rn = nr - rp;
            const double children =
                (lp * lp + ln * ln) / nl + (rp * rp + rn * rn) / nr;
            if (children - parent > best.gain + 1e-12) {
                best.gain = children - parent;
                best.feature = feature;
                best.threshold = 0.5 * (prev + v);
            }
        }
        while (i < vp.size() && vp[i] == v) ++i, ++left_pos, ++left_tot;
        while (j < vn.size() && vn[j] == v) ++j, ++left_tot;
        prev = v;
    }
}

inline Tree fit_tree(const ColumnMatrix& cols, const std::vector<int>& labels,
                     std::size_t n_features, const ForestSpec& spec,
                     std::size_t mtry, std::uint64_t tree_seed,
                     SplitScratch& scratch) {
    const std::size_t n = cols.n;
    const std::size_t p = n_features;
    Rng rng(tree_seed);

    Tree tree;
    tree.bootstrap_counts.assign(n, 0);
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t pick = rng.next_below(n);
        rows[i] = pick;
        ++tree.bootstrap_counts[pick];
    }

    struct Work {
        std::size_t lo, hi;
        std::int32_t node;
    };
    std::vector<Work> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, n, 0});

    while (!stack.empty()) {
        const Work w = stack.back();
        stack.pop_back();
        const std::size_t count = w.hi - w.lo;
        std::size_t n_pos = 0;
        for (std::size_t i = w.lo; i < w.hi; ++i)
            n_pos += static_cast<std::size_t>(labels[rows[i]]);

        auto make_leaf = [&]() {
            tree.nodes[w.node].feature = -1;
            tree.nodes[w.node].leaf_vote = n_pos * 2 > count ? 1 : 0;
        };
        if (n_pos == 0 || n_pos == count || count <= spec.min_node) {
            make_leaf();
            continue;
        }

        // sample mtry distinct candidate features
        auto& pool = scratch.feature_pool;
        pool.resize(p);
        for (std::size_t j = 0; j < p; ++j) pool[j] = j;
        BestSplit best;
        for (std::size_t k = 0; k < mtry; ++k) {
            const std::size_t pick = k + rng.next_below(p - k);
            std::swap(pool[k], pool[pick]);
            scan_feature(cols, labels, rows, w.lo, w.hi, pool[k], scratch, best);
        }
        if (best.gain <= 0.0) {
            make_leaf();
            continue;
        }

        const double* split_col = cols.column(best.feature);
        auto mid = std::partition(rows.begin() + w.lo, rows.begin() + w.hi,
                                  [&](std::size_t r) {
                                      return split_col[r] <= best.threshold;
                                  });
        const std::size_t split = static_cast<std::size_t>(mid - rows.begin());
        if (split == w.lo || split == w.hi) {  // numerically empty side
            make_leaf();
            continue;
        }

        const std::int32_t left = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        tree.nodes[w.node].feature = static_cast<std::int32_t>(best.feature);
        tree.nodes[w.node].threshold = best.threshold;
        tree.nodes[w.node].left = left;
        tree.nodes[w.node].right = left + 1;
        stack.push_back({w.lo, split, left});
        stack.push_back({split, w.hi, left + 1});
    }
    return tree;
}

}  // namespace detail

inline std::size_t default_mtry(std::size_t n_features) {
    const auto m = static_cast<std::size_t>(
        std::floor(std::sqrt(static_cast<double>(n_features))));
    return std::clamp<std::size_t>(m, 1, n_features);
}

/// Fits ntree trees on bootstrap resamples (n draws with replacement), each
/// split chosen by best Gini improvement among mtry uniformly sampled
/// features. Per-tree RNG streams derive from (seed, tree index) so the
/// forest is identical whether trees run sequentially or in parallel.
inline ForestModel fit_random_forest_model(const Dataset& ds,
                                           const ForestSpec& spec) {
    if (spec.ntree < 1) throw ConfigError("random forest: ntree must be >= 1");
    if (ds.count_label(1) == 0 || ds.count_label(0) == 0)
        throw DataError("fit_random_forest: training data must contain both classes");
    const std::size_t mtry =
        spec.mtry == 0 ? default_mtry(ds.n_features())
                       : std::min(spec.mtry, ds.n_features());

    const detail::ColumnMatrix cols(ds);
    ForestModel model;
    model.n_features = ds.n_features();
    model.trees.resize(spec.ntree);
    parallel_for(spec.ntree, [&](std::size_t t) {
        thread_local detail::SplitScratch scratch;
        model.trees[t] = detail::fit_tree(
            cols, ds.labels(), ds.n_features(), spec, mtry,
            derive_seed(spec.seed, hash_tag("tree"), static_cast<std::uint64_t>(t)),
            scratch);
    });
    return model;
}

inline OobScores compute_oob_scores(const ForestModel& model, const Dataset& ds) {
    const std::size_t n = ds.n_samples();
    OobScores oob;
    oob.scores.assign(n, std::numeric_limits<double>::quiet_NaN());
    oob.n_oob_trees.assign(n, 0);
    std::vector<std::size_t> pos_votes(n, 0);
    for (const Tree& t : model.trees) {
        for (std::size_t i = 0; i < n; ++i) {
            if (t.bootstrap_counts[i] != 0) continue;
            ++oob.n_oob_trees[i];
            if (t.vote(ds.row(i))) ++pos_votes[i];
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (oob.n_oob_trees[i] > 0)
            oob.scores[i] = static_cast<double>(pos_votes[i]) /
                            static_cast<double>(oob.n_oob_trees[i]);
    return oob;
}

inline std::pair<ForestModel, OobScores> fit_random_forest(const Dataset& ds,
                                                           const ForestSpec& spec) {
    ForestModel model = fit_random_forest_model(ds, spec);
    OobScores oob = compute_oob_scores(model, ds);
    return {std::move(model), std::move(oob)};
}

namespace detail {
/// Out-of-bag misclassification rate at the 0.5 vote threshold, over samples
/// with at least one OOB tree.
inline double oob_error(const Dataset& ds, const ForestSpec& spec,
                        std::size_t mtry) {
    ForestSpec s = spec;
    s.mtry = mtry;
    auto [model, oob] = fit_random_forest(ds, s);
    std::size_t wrong = 0, counted = 0;
    for (std::size_t i = 0; i < ds.n_samples(); ++i) {
        if (!oob.defined(i)) continue;
        ++counted;
        if ((oob.scores[i] >= 0.5) != (ds.labels()[i] == 1)) ++wrong;
    }
    return counted == 0 ? 1.0
                        : static_cast<double>(wrong) / static_cast<double>(counted);
}
}  // namespace detail

/// Tunes mtry by hill-climbing in steps of two on the out-of-bag error:
/// start at floor(sqrt(p)), probe start +- 2, keep stepping in the strictly
/// improving direction until the error stops dropping or the bounds clip.
/// Returns the argmin over every explored candidate, ties to the smaller
/// mtry. All candidate forests share the spec seed so comparisons are
/// paired. With fewer than 3 features only the start value is feasible.
inline std::size_t tune_mtry(const Dataset& ds, const ForestSpec& spec) {
    const std::size_t p = ds.n_features();
    const std::size_t start = default_mtry(p);
    if (p < 3) return start;

    auto clampm = [p](long m) {
        return static_cast<std::size_t>(std::clamp<long>(m, 1, static_cast<long>(p)));
    };
    std::vector<double> cache(p + 1, -1.0);
    auto err = [&](std::size_t m) {
        if (cache[m] < 0.0) cache[m] = detail::oob_error(ds, spec, m);
        return cache[m];
    };

    const std::size_t down = clampm(static_cast<long>(start) - 2);
    const std::size_t up = clampm(static_cast<long>(start) + 2);
    err(start);
    if (down != start) err(down);
    if (up != start) err(up);

    long dir = 0;
    std::size_t current = start;
    if (down != start && err(down) < err(start) && err(down) <= err(up)) {
        dir = -2;
        current = down;
    } else if (up != start && err(up) < err(start)) {
        dir = 2;
        current = up;
    }
    while (dir != 0) {
        const std::size_t next = clampm(static_cast<long>(current) + dir);
        if (next == current || err(next) >= err(current)) break;
        current = next;
    }

    std::size_t best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t m = 1; m <= p; ++m) {
        if (cache[m] < 0.0) continue;  // not explored
        if (cache[m] < best_err) {
            best_err = cache[m];
            best = m;
        }
    }
    return best;
}

}  // namespace calib
