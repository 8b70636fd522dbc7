#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "knock/error.hpp"
#include "knock/features.hpp"
#include "knock/manifest.hpp"
#include "knock/rng.hpp"

namespace knock {

/// Hold-out and cross-validation settings.
struct SplitConfig {
    double test_fraction = 0.10;
    bool stratified = true;
    std::size_t k_folds = 5;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(test_fraction > 0.0 && test_fraction < 1.0))
            throw ArgumentError("test_fraction must lie in (0, 1)");
        if (k_folds < 2) throw ArgumentError("k_folds must be >= 2");
    }
};

namespace detail {

inline void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j =
            static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(idx[i - 1], idx[j]);
    }
}

inline std::array<std::vector<std::size_t>, 3> indices_by_class(const Manifest& m) {
    std::array<std::vector<std::size_t>, 3> by_class;
    for (std::size_t i = 0; i < m.size(); ++i)
        by_class[static_cast<int>(m[i].label)].push_back(i);
    return by_class;
}

} // namespace detail

/// Materialize a sub-manifest from indices (paths resolved to the source).
inline Manifest manifest_subset(const Manifest& m, const std::vector<std::size_t>& indices) {
    Manifest out;
    for (auto i : indices) {
        ManifestEntry e = m[i];
        e.path = m.resolve(m[i]);
        out.add(std::move(e));
    }
    return out;
}

/**
 * Stratified shuffle split. Per class, round(test_fraction * count) clips
 * go to the test side; the partition is deterministic in the seed,
 * disjoint, and exhaustive.
 */
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_train_test_indices(const Manifest& m, const SplitConfig& cfg) {
    cfg.validate();
    std::vector<std::size_t> train, test;
    if (cfg.stratified) {
        auto by_class = detail::indices_by_class(m);
        for (int c = 0; c < 3; ++c) {
            if (by_class[c].empty())
                throw ArgumentError("stratified split: class " + std::to_string(c) +
                                    " has no clips");
            Rng rng = Rng(cfg.seed).split(static_cast<std::uint64_t>(c));
            detail::shuffle_indices(by_class[c], rng);
            const std::size_t n_test = static_cast<std::size_t>(
                std::lround(cfg.test_fraction * static_cast<double>(by_class[c].size())));
            for (std::size_t i = 0; i < by_class[c].size(); ++i)
                (i < n_test ? test : train).push_back(by_class[c][i]);
        }
    } else {
        std::vector<std::size_t> idx(m.size());
        std::iota(idx.begin(), idx.end(), 0);
        Rng rng(cfg.seed);
        detail::shuffle_indices(idx, rng);
        const std::size_t n_test = static_cast<std::size_t>(
            std::lround(cfg.test_fraction * static_cast<double>(idx.size())));
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_test ? test : train).push_back(idx[i]);
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

inline std::pair<Manifest, Manifest> split_train_test(const Manifest& m,
                                                      const SplitConfig& cfg) {
    auto [train, test] = split_train_test_indices(m, cfg);
    return {manifest_subset(m, train), manifest_subset(m, test)};
}

/**
 * Stratified k-fold: each clip lands in exactly one validation fold and
 * per-class fold sizes differ by at most one.
 */
inline std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>
kfold_split_indices(const Manifest& m, const SplitConfig& cfg) {
    cfg.validate();
    auto by_class = detail::indices_by_class(m);
    for (int c = 0; c < 3; ++c)
        if (by_class[c].size() < cfg.k_folds)
            throw ArgumentError("k-fold: class " + std::to_string(c) + " has " +
                                std::to_string(by_class[c].size()) + " clips, fewer than k=" +
                                std::to_string(cfg.k_folds));

    std::vector<std::vector<std::size_t>> folds(cfg.k_folds);
    for (int c = 0; c < 3; ++c) {
        Rng rng = Rng(cfg.seed).split(100 + static_cast<std::uint64_t>(c));
        detail::shuffle_indices(by_class[c], rng);
        for (std::size_t i = 0; i < by_class[c].size(); ++i)
            folds[i % cfg.k_folds].push_back(by_class[c][i]);
    }

    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> out;
    for (std::size_t f = 0; f < cfg.k_folds; ++f) {
        std::vector<std::size_t> train, val = folds[f];
        for (std::size_t g = 0; g < cfg.k_folds; ++g)
            if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
        std::sort(train.begin(), train.end());
        std::sort(val.begin(), val.end());
        out.push_back({std::move(train), std::move(val)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// 3x3 confusion counts, rows = true label, columns = predicted label.
struct ConfusionMatrix {
    std::array<std::array<long, 3>, 3> counts{};

    long total() const {
        long t = 0;
        for (const auto& row : counts)
            for (long v : row) t += v;
        return t;
    }

    long trace() const { return counts[0][0] + counts[1][1] + counts[2][2]; }
};

inline ConfusionMatrix confusion(const std::vector<std::pair<int, int>>& pairs) {
    ConfusionMatrix cm;
    for (const auto& [t, p] : pairs) {
        if (t < 0 || t > 2 || p < 0 || p > 2)
            throw ArgumentError("confusion: label out of range");
        cm.counts[t][p]++;
    }
    return cm;
}

struct ClassMetrics {
    double precision = 0.0; // percent
    double recall = 0.0;
    double f1 = 0.0;
    long support = 0;
    bool degenerate = false; // a zero denominator was reported as 0
};

struct MetricsReport {
    double accuracy = 0.0; // percent
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1_macro = 0.0;
    std::array<ClassMetrics, 3> per_class{};
    ConfusionMatrix confusion;

    std::array<double, 4> indicators() const {
        return {accuracy, precision_macro, recall_macro, f1_macro};
    }
};

/**
 * Accuracy, one-vs-rest precision/recall/F1 per class, and their macro
 * (unweighted) averages, all in percent. Recall is TP/(TP+FN); classes with
 * an empty denominator report 0 and are flagged degenerate.
 */
inline MetricsReport metrics(const ConfusionMatrix& cm) {
    const long total = cm.total();
    if (total <= 0) throw ArgumentError("metrics: empty confusion matrix");

    MetricsReport rep;
    rep.confusion = cm;
    rep.accuracy = 100.0 * static_cast<double>(cm.trace()) / static_cast<double>(total);

    double psum = 0.0, rsum = 0.0, fsum = 0.0;
    for (int c = 0; c < 3; ++c) {
        const long tp = cm.counts[c][c];
        long fp = 0, fn = 0;
        for (int o = 0; o < 3; ++o) {
            if (o == c) continue;
            fp += cm.counts[o][c];
            fn += cm.counts[c][o];
        }
        ClassMetrics& cmx = rep.per_class[c];
        cmx.support = tp + fn;
        if (tp + fp > 0)
            cmx.precision = 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fp);
        else
            cmx.degenerate = true;
        if (tp + fn > 0)
            cmx.recall = 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn);
        else
            cmx.degenerate = true;
        if (cmx.precision + cmx.recall > 0.0)
            cmx.f1 = 2.0 * cmx.precision * cmx.recall / (cmx.precision + cmx.recall);
        else
            cmx.degenerate = true;
        psum += cmx.precision;
        rsum += cmx.recall;
        fsum += cmx.f1;
    }
    rep.precision_macro = psum / 3.0;
    rep.recall_macro = rsum / 3.0;
    rep.f1_macro = fsum / 3.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Model comparison
// ---------------------------------------------------------------------------

/**
 * Two-sided Welch t-test over two indicator vectors (at least 2 values
 * each). Zero-variance pairs short-circuit: p = 1 when the means agree,
 * 0 otherwise.
 */
inline double compare_models(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw ArgumentError("compare_models: need at least 2 indicators per side");
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / na;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
    double va = 0.0, vb = 0.0;
    for (double v : a) va += (v - ma) * (v - ma);
    for (double v : b) vb += (v - mb) * (v - mb);
    va /= na - 1.0;
    vb /= nb - 1.0;

    if (va == 0.0 && vb == 0.0) return ma == mb ? 1.0 : 0.0;

    const double sa = va / na, sb = vb / nb;
    const double t = (ma - mb) / std::sqrt(sa + sb);
    const double df = (sa + sb) * (sa + sb) /
                      (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    const boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(dist, -std::abs(t));
}

/// Reference scores (accuracy, F1 in percent) of the prior ML study.
struct MlReference {
    const char* name;
    double accuracy;
    double f1;
};

inline const std::array<MlReference, 3>& ml_references() {
    static const std::array<MlReference, 3> refs{{{"ann", 81.74, 79.27},
                                                  {"rf", 83.48, 81.35},
                                                  {"svm", 80.00, 76.67}}};
    return refs;
}

// ---------------------------------------------------------------------------
// Outlier screening
// ---------------------------------------------------------------------------

/**
 * Per-class z-score filter on feature-vector L2 norms: drops clips with
 * |z| > 3 but never below half of a class. Classes with fewer than 3 clips
 * or zero norm variance are passed through. Returns retained indices in
 * ascending order.
 */
inline std::vector<std::size_t> outlier_filter(const std::vector<FeatureTensor>& features,
                                               const std::vector<int>& labels) {
    if (features.size() != labels.size())
        throw ArgumentError("outlier_filter: one label per feature tensor");
    std::array<std::vector<std::size_t>, 3> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] > 2)
            throw ArgumentError("outlier_filter: label out of range");
        by_class[labels[i]].push_back(i);
    }

    std::vector<std::size_t> retained;
    for (int c = 0; c < 3; ++c) {
        const auto& idx = by_class[c];
        if (idx.size() < 3) {
            retained.insert(retained.end(), idx.begin(), idx.end());
            continue;
        }
        std::vector<double> norms(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            double acc = 0.0;
            for (double v : features[idx[i]].data) acc += v * v;
            norms[i] = std::sqrt(acc);
        }
        const double n = static_cast<double>(idx.size());
        const double mean = std::accumulate(norms.begin(), norms.end(), 0.0) / n;
        double var = 0.0;
        for (double v : norms) var += (v - mean) * (v - mean);
        var /= n;
        const double sd = std::sqrt(var);
        if (sd == 0.0) {
            retained.insert(retained.end(), idx.begin(), idx.end());
            continue;
        }

        std::vector<std::pair<double, std::size_t>> scored(idx.size()); // |z|, index
        for (std::size_t i = 0; i < idx.size(); ++i)
            scored[i] = {std::abs((norms[i] - mean) / sd), idx[i]};
        std::sort(scored.begin(), scored.end());
        const std::size_t min_keep = (idx.size() + 1) / 2;
        for (std::size_t i = 0; i < scored.size(); ++i)
            if (scored[i].first <= 3.0 || i < min_keep) retained.push_back(scored[i].second);
    }
    std::sort(retained.begin(), retained.end());
    return retained;
}

} // namespace knock
