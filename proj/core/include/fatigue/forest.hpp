#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fatigue/matrix.hpp"

namespace fatigue::forest {

struct ForestParams {
    int n_trees = 300;
    int mtry = 0;              // 0 = max(1, p / 3)
    int min_samples_leaf = 5;
    int max_depth = 0;         // 0 = unlimited
    bool bootstrap = true;
    std::uint64_t seed = 0;
    int n_threads = 1;

    int effective_mtry(std::size_t p) const;
};

// Flat node array; feature == -1 marks a leaf. `gain` is the SSE
// reduction of the split (equivalently node size times the variance
// impurity decrease).
struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    double gain = 0.0;
    int n_samples = 0;
};

struct Tree {
    std::vector<Node> nodes;

    double predict(const double* x) const;
};

struct Split {
    int feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

// Exhaustive CART variance-reduction search over the given rows and
// feature subset (must be ascending). Thresholds sit at midpoints of
// consecutive distinct sorted values; returns the highest-gain split
// with both children >= min_samples_leaf, ties broken toward the lowest
// feature index and then the lowest threshold. No positive-gain split
// gives nullopt.
std::optional<Split> best_split(const Matrix& X, std::span<const double> y,
                                std::span<const int> rows,
                                std::span<const int> feature_subset,
                                int min_samples_leaf);

class Forest {
public:
    ForestParams params;
    std::size_t n_features = 0;
    double base = 0.0;  // added back to every prediction; see fit_forest
    std::vector<Tree> trees;
    std::vector<double> importance_raw;  // per-feature accumulated gain

    double predict(std::span<const double> x) const;
    std::vector<double> predict_rows(const Matrix& X) const;

    // Accumulated split gains normalized to sum 1; all zeros when the
    // forest never split.
    std::vector<double> importance() const;
};

// Fits n_trees CART trees on bootstrap resamples. Tree t draws all its
// randomness from a generator seeded by hash(seed, t), so the result is
// bit-for-bit identical at any thread count. Targets are internally
// rebased by y[0] (restored in predict); tree structure therefore
// depends on y only through differences, and refitting on y + c with
// the same seed reproduces the same trees with only the base shifted.
Forest fit_forest(const Matrix& X, std::span<const double> y,
                  const ForestParams& params);

// Versioned JSON document; doubles use shortest round-trip formatting,
// so serialize -> parse -> serialize is byte-stable.
std::string to_json(const Forest& forest);
Forest forest_from_json(const std::string& text);
void save_forest(const Forest& forest, const std::string& path);
Forest load_forest(const std::string& path);

}  // namespace fatigue::forest
