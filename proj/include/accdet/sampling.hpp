#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "accdet/dataio.hpp"
#include "accdet/numerics.hpp"

// Synthetic minority oversampling: new accident-class windows are drawn on
// the segments between a minority sample and one of its k nearest minority
// neighbors. Neighbor distances are measured in the min-max scaled feature
// space so no unit dominates; the interpolation itself is affine and can be
// done on the raw features with the same lambda.

namespace accdet {

struct SmoteConfig {
    std::size_t k_neighbors = 5;
    double target_ratio = 1.0;  // desired minority:majority size ratio
    std::uint64_t seed = 1;
    bool parallel = true;  // OpenMP neighbor search
};

// Indices of the k nearest other points by Euclidean distance, ties broken
// toward the lower index; the query point itself is excluded.
std::vector<std::size_t> knn_indices(const std::vector<Vector>& points, std::size_t query_index,
                                     std::size_t k);

// k nearest neighbors for every point. The serial form is the reference; the
// OpenMP form must produce identical tables (rows are independent).
std::vector<std::vector<std::size_t>> knn_table_serial(const std::vector<Vector>& points,
                                                       std::size_t k);
std::vector<std::vector<std::size_t>> knn_table_omp(const std::vector<Vector>& points,
                                                    std::size_t k);

// a + lambda * (b - a), elementwise.
Vector interpolate(const Vector& a, const Vector& b, double lambda);

// Returns the original windows (unchanged, in order) followed by synthetic
// minority windows until minority == round(target_ratio * majority).
// Seed points are cycled round-robin; per point the neighbor is drawn
// uniformly from its k nearest and lambda from Uniform(0,1).
Dataset smote_oversample(const Dataset& ds, const ScalerParams& scaler, const SmoteConfig& cfg);

}  // namespace accdet
