#include "fatigue/forest.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <utility>

#include <nlohmann/json.hpp>

#include "fatigue/csv.hpp"
#include "fatigue/error.hpp"
#include "fatigue/rng.hpp"

namespace fatigue::forest {

int ForestParams::effective_mtry(std::size_t p) const {
    if (mtry > 0) return std::min(mtry, static_cast<int>(p));
    return std::max(1, static_cast<int>(p) / 3);
}

double Tree::predict(const double* x) const {
    int node = 0;
    while (nodes[node].feature >= 0) {
        const Node& n = nodes[node];
        node = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes[node].value;
}

std::optional<Split> best_split(const Matrix& X, std::span<const double> y,
                                std::span<const int> rows,
                                std::span<const int> feature_subset,
                                int min_samples_leaf) {
    const std::size_t n = rows.size();
    if (n < 2 * static_cast<std::size_t>(min_samples_leaf)) return std::nullopt;

    double total = 0.0;
    for (int r : rows) total += y[r];
    const double parent_term =
        total * total / static_cast<double>(n);

    std::optional<Split> best;
    std::vector<std::pair<double, double>> ordered(n);

    for (int f : feature_subset) {
        for (std::size_t i = 0; i < n; ++i)
            ordered[i] = {X.at(rows[i], f), y[rows[i]]};
        // Sorting on (x, y) keeps the left/right sums independent of the
        // incoming row order when feature values tie.
        std::sort(ordered.begin(), ordered.end());
        if (ordered.front().first == ordered.back().first) continue;

        double left_sum = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            left_sum += ordered[i - 1].second;
            if (ordered[i].first == ordered[i - 1].first) continue;
            const auto n_left = static_cast<double>(i);
            const auto n_right = static_cast<double>(n - i);
            if (i < static_cast<std::size_t>(min_samples_leaf) ||
                n - i < static_cast<std::size_t>(min_samples_leaf))
                continue;
            const double right_sum = total - left_sum;
            const double gain = left_sum * left_sum / n_left +
                                right_sum * right_sum / n_right - parent_term;
            if (gain <= 0.0) continue;
            if (!best || gain > best->gain) {
                const double lo = ordered[i - 1].first;
                const double hi = ordered[i].first;
                double threshold = lo + (hi - lo) / 2.0;
                if (!(threshold < hi)) threshold = lo;  // keep x <= t on the left
                best = Split{f, threshold, gain};
            }
        }
    }
    return best;
}

namespace {

struct TreeBuilder {
    const Matrix& X;
    std::span<const double> y;
    const ForestParams& params;
    int mtry;
    Rng rng;
    std::vector<Node> nodes;
    std::vector<int> feature_pool;   // scratch for sampling
    std::vector<int> feature_subset;

    int build(std::span<int> rows, int depth) {
        const std::size_t n = rows.size();
        double sum = 0.0;
        double lo = y[rows[0]], hi = y[rows[0]];
        for (int r : rows) {
            sum += y[r];
            lo = std::min(lo, y[r]);
            hi = std::max(hi, y[r]);
        }

        const bool can_split =
            n >= 2 * static_cast<std::size_t>(params.min_samples_leaf) &&
            lo != hi &&
            (params.max_depth == 0 || depth < params.max_depth);

        std::optional<Split> split;
        if (can_split) {
            rng.sample_indices(X.cols(), static_cast<std::size_t>(mtry),
                               feature_pool, feature_subset);
            std::sort(feature_subset.begin(), feature_subset.end());
            split = best_split(X, y, rows, feature_subset,
                               params.min_samples_leaf);
        }

        const int id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        if (!split) {
            nodes[id].value = sum / static_cast<double>(n);
            nodes[id].n_samples = static_cast<int>(n);
            return id;
        }

        auto mid = std::partition(rows.begin(), rows.end(), [&](int r) {
            return X.at(r, split->feature) <= split->threshold;
        });
        const auto n_left = static_cast<std::size_t>(mid - rows.begin());

        nodes[id].feature = split->feature;
        nodes[id].threshold = split->threshold;
        nodes[id].gain = split->gain;
        nodes[id].n_samples = static_cast<int>(n);
        const int left = build(rows.subspan(0, n_left), depth + 1);
        const int right = build(rows.subspan(n_left), depth + 1);
        nodes[id].left = left;
        nodes[id].right = right;
        return id;
    }
};

Tree fit_tree(const Matrix& X, std::span<const double> y,
              const ForestParams& params, std::uint64_t tree_seed) {
    TreeBuilder builder{X, y, params, params.effective_mtry(X.cols()),
                        Rng(tree_seed), {}, {}, {}};
    const std::size_t n = X.rows();
    std::vector<int> rows(n);
    if (params.bootstrap) {
        for (std::size_t i = 0; i < n; ++i)
            rows[i] = static_cast<int>(builder.rng.bounded(n));
    } else {
        for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<int>(i);
    }
    builder.nodes.reserve(2 * n / std::max(1, params.min_samples_leaf) + 1);
    builder.build(rows, 0);
    Tree tree;
    tree.nodes = std::move(builder.nodes);
    return tree;
}

}  // namespace

double Forest::predict(std::span<const double> x) const {
    if (x.size() != n_features)
        throw Error("predict: expected " + std::to_string(n_features) +
                    " features, got " + std::to_string(x.size()));
    double sum = 0.0;
    for (const auto& tree : trees) sum += tree.predict(x.data());
    return sum / static_cast<double>(trees.size()) + base;
}

std::vector<double> Forest::predict_rows(const Matrix& X) const {
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i)
        out[i] = predict({X.row(i), X.cols()});
    return out;
}

std::vector<double> Forest::importance() const {
    std::vector<double> out(importance_raw);
    double total = 0.0;
    for (double v : out) total += v;
    if (total > 0.0)
        for (double& v : out) v /= total;
    return out;
}

Forest fit_forest(const Matrix& X, std::span<const double> y,
                  const ForestParams& params) {
    const std::size_t n = X.rows();
    const std::size_t p = X.cols();
    if (n != y.size()) throw Error("fit_forest: X rows and y length differ");
    if (n < 2) throw Error("fit_forest: need at least 2 samples");
    if (params.n_trees < 1) throw Error("fit_forest: n_trees must be >= 1");
    if (params.min_samples_leaf < 1)
        throw Error("fit_forest: min_samples_leaf must be >= 1");
    for (double v : y)
        if (!std::isfinite(v)) throw Error("fit_forest: non-finite target");
    for (double v : X.data())
        if (!std::isfinite(v)) throw Error("fit_forest: non-finite feature");

    Forest forest;
    forest.params = params;
    forest.n_features = p;
    forest.base = y[0];
    forest.trees.resize(static_cast<std::size_t>(params.n_trees));

    std::vector<double> rebased(n);
    for (std::size_t i = 0; i < n; ++i) rebased[i] = y[i] - forest.base;

    const int threads = std::max(1, params.n_threads);
    auto fit_range = [&](int begin, int end) {
        for (int t = begin; t < end; ++t)
            forest.trees[t] =
                fit_tree(X, rebased, params, hash_combine(params.seed,
                                                          static_cast<std::uint64_t>(t)));
    };
    if (threads == 1) {
        fit_range(0, params.n_trees);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (params.n_trees + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int begin = t * chunk;
            const int end = std::min(params.n_trees, begin + chunk);
            if (begin < end) pool.emplace_back(fit_range, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    forest.importance_raw.assign(p, 0.0);
    for (const auto& tree : forest.trees)
        for (const auto& node : tree.nodes)
            if (node.feature >= 0) forest.importance_raw[node.feature] += node.gain;
    return forest;
}

std::string to_json(const Forest& forest) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : forest.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes)
            nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value,
                             n.gain, n.n_samples});
        trees.push_back(std::move(nodes));
    }
    nlohmann::json doc = {
        {"format_version", 1},
        {"kind", "forest"},
        {"params",
         {{"n_trees", forest.params.n_trees},
          {"mtry", forest.params.mtry},
          {"min_samples_leaf", forest.params.min_samples_leaf},
          {"max_depth", forest.params.max_depth},
          {"bootstrap", forest.params.bootstrap},
          {"seed", forest.params.seed}}},
        {"n_features", forest.n_features},
        {"base", forest.base},
        {"importance", forest.importance_raw},
        {"trees", std::move(trees)}};
    return doc.dump();
}

Forest forest_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("forest document is not valid JSON: ") + e.what());
    }
    if (doc.value("kind", "") != "forest" || doc.value("format_version", 0) != 1)
        throw Error("not a version-1 forest document");

    Forest forest;
    const auto& p = doc.at("params");
    forest.params.n_trees = p.at("n_trees").get<int>();
    forest.params.mtry = p.at("mtry").get<int>();
    forest.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
    forest.params.max_depth = p.at("max_depth").get<int>();
    forest.params.bootstrap = p.at("bootstrap").get<bool>();
    forest.params.seed = p.at("seed").get<std::uint64_t>();
    forest.n_features = doc.at("n_features").get<std::size_t>();
    forest.base = doc.at("base").get<double>();
    forest.importance_raw = doc.at("importance").get<std::vector<double>>();
    for (const auto& tree_doc : doc.at("trees")) {
        Tree tree;
        tree.nodes.reserve(tree_doc.size());
        for (const auto& n : tree_doc) {
            Node node;
            node.feature = n.at(0).get<int>();
            node.threshold = n.at(1).get<double>();
            node.left = n.at(2).get<int>();
            node.right = n.at(3).get<int>();
            node.value = n.at(4).get<double>();
            node.gain = n.at(5).get<double>();
            node.n_samples = n.at(6).get<int>();
            tree.nodes.push_back(node);
        }
        forest.trees.push_back(std::move(tree));
    }
    return forest;
}

void save_forest(const Forest& forest, const std::string& path) {
    csv::Writer out(path);
    out.write(to_json(forest));
    out.write("\n");
    out.close();
}

Forest load_forest(const std::string& path) {
    csv::LineReader reader(path);
    std::string text;
    while (auto line = reader.next()) text.append(*line);
    return forest_from_json(text);
}

}  // namespace fatigue::forest
