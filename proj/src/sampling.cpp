#include "accdet/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "accdet/rng.hpp"

namespace accdet {

namespace {

double sq_distance(const Vector& a, const Vector& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

std::vector<std::size_t> knn_row(const std::vector<Vector>& points, std::size_t query,
                                 std::size_t k) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(points.size() - 1);
    for (std::size_t j = 0; j < points.size(); ++j) {
        if (j == query) continue;
        dist.emplace_back(sq_distance(points[query], points[j]), j);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
    return out;
}

}  // namespace

std::vector<std::size_t> knn_indices(const std::vector<Vector>& points, std::size_t query_index,
                                     std::size_t k) {
    if (query_index >= points.size())
        throw std::invalid_argument("knn_indices: query index " + std::to_string(query_index) +
                                    " out of range (have " + std::to_string(points.size()) +
                                    " points)");
    if (k == 0 || k >= points.size())
        throw std::invalid_argument("knn_indices: k = " + std::to_string(k) +
                                    " must be in [1, " + std::to_string(points.size()) + ")");
    for (const Vector& p : points)
        if (p.size() != points.front().size())
            throw std::invalid_argument("knn_indices: points have mixed dimensions");
    return knn_row(points, query_index, k);
}

std::vector<std::vector<std::size_t>> knn_table_serial(const std::vector<Vector>& points,
                                                       std::size_t k) {
    std::vector<std::vector<std::size_t>> table(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) table[i] = knn_row(points, i, k);
    return table;
}

std::vector<std::vector<std::size_t>> knn_table_omp(const std::vector<Vector>& points,
                                                    std::size_t k) {
    std::vector<std::vector<std::size_t>> table(points.size());
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        table[static_cast<std::size_t>(i)] = knn_row(points, static_cast<std::size_t>(i), k);
    return table;
}

Vector interpolate(const Vector& a, const Vector& b, double lambda) {
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + lambda * (b[i] - a[i]);
    return out;
}

Dataset smote_oversample(const Dataset& ds, const ScalerParams& scaler, const SmoteConfig& cfg) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const TrafficWindow& w : ds) (w.label == 1 ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("smote: dataset must contain both classes (" +
                                    std::to_string(n_pos) + " accident / " +
                                    std::to_string(n_neg) + " non-accident)");

    const int minority_label = n_pos <= n_neg ? 1 : 0;
    const std::size_t n_min = std::min(n_pos, n_neg);
    const std::size_t n_maj = std::max(n_pos, n_neg);
    if (cfg.k_neighbors == 0 || cfg.k_neighbors >= n_min)
        throw std::invalid_argument("smote: k_neighbors = " + std::to_string(cfg.k_neighbors) +
                                    " needs more minority samples than k (have " +
                                    std::to_string(n_min) + ")");

    const std::size_t target =
        static_cast<std::size_t>(std::llround(cfg.target_ratio * static_cast<double>(n_maj)));
    if (target < n_min)
        throw std::invalid_argument("smote: target_ratio " + std::to_string(cfg.target_ratio) +
                                    " would shrink the minority class (" + std::to_string(target) +
                                    " < " + std::to_string(n_min) + ")");

    std::vector<std::size_t> minority_rows;
    minority_rows.reserve(n_min);
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds[i].label == minority_label) minority_rows.push_back(i);

    // Neighbor metric lives in the scaled space; synthesis interpolates the
    // raw features (affine scaling makes the two equivalent pointwise).
    std::vector<Vector> scaled(n_min);
    std::vector<std::array<double, kFlatFeatures>> raw(n_min);
    for (std::size_t i = 0; i < n_min; ++i) {
        raw[i] = flatten_features(ds[minority_rows[i]]);
        auto sf = scale_features(scaler, raw[i]);
        scaled[i].assign(sf.begin(), sf.end());
    }

    auto table = cfg.parallel ? knn_table_omp(scaled, cfg.k_neighbors)
                              : knn_table_serial(scaled, cfg.k_neighbors);

    Dataset out = ds;
    out.reserve(ds.size() + (target - n_min));
    Rng rng(cfg.seed);
    std::size_t seed_cursor = 0;
    for (std::size_t made = n_min; made < target; ++made) {
        const std::size_t i = seed_cursor;
        seed_cursor = (seed_cursor + 1) % n_min;
        const std::size_t nn = table[i][rng.below(cfg.k_neighbors)];
        const double lambda = rng.uniform01();
        std::array<double, kFlatFeatures> synth{};
        for (std::size_t c = 0; c < kFlatFeatures; ++c)
            synth[c] = raw[i][c] + lambda * (raw[nn][c] - raw[i][c]);
        out.push_back(window_from_features(synth.data(), minority_label));
    }
    return out;
}

}  // namespace accdet
