#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "accdet/dataio.hpp"
#include "accdet/recurrent.hpp"

// Binary cross-entropy, the mini-batch Adam training loop and thresholded
// prediction. The per-sample gradient work inside a batch is data-parallel;
// both the serial reference kernels and the OpenMP kernels reduce per-sample
// results in a fixed block order, so results are bit-identical for any
// thread count.

namespace accdet {

struct TrainConfig {
    std::size_t epochs = 2500;
    std::size_t batch_size = 2000;
    double learning_rate = 0.001;
    double clip_norm = 5.0;
    std::uint64_t seed = 1;
    std::vector<double> threshold_grid;  // empty -> 0.01..0.99 step 0.01
    bool parallel = true;
};

struct TrainedModel {
    NetworkSpec spec;
    NetworkParams params;
    ScalerParams scaler;
    double threshold = 0.5;
    std::vector<double> training_log;  // mean loss per epoch
};

// -[y ln p + (1-y) ln(1-p)] with p clamped to [1e-12, 1-1e-12].
double binary_crossentropy(double p, int label);

struct BatchResult {
    Vector grad;             // mean gradient over the batch, flat layout
    double mean_loss = 0.0;  // mean clamped cross-entropy over the batch
};

// Gradient of the mean loss over batch_indices into sequences/labels.
BatchResult batch_gradient_serial(const NetworkSpec& spec, const NetworkParams& params,
                                  const std::vector<std::vector<Vector>>& sequences,
                                  const std::vector<int>& labels,
                                  const std::vector<std::size_t>& batch_indices);
BatchResult batch_gradient_omp(const NetworkSpec& spec, const NetworkParams& params,
                               const std::vector<std::vector<Vector>>& sequences,
                               const std::vector<int>& labels,
                               const std::vector<std::size_t>& batch_indices);

// Head probability for every sequence.
std::vector<double> score_sequences_serial(const NetworkSpec& spec, const NetworkParams& params,
                                           const std::vector<std::vector<Vector>>& sequences);
std::vector<double> score_sequences_omp(const NetworkSpec& spec, const NetworkParams& params,
                                        const std::vector<std::vector<Vector>>& sequences);

// Shuffled mini-batch Adam over the SMOTE-balanced training windows. The last
// 10% of the seeded shuffle is held out from the updates and used to pick the
// decision threshold (argmax of detection rate minus false alarm rate).
// Deterministic: (seed, data, config) fully determine the result.
TrainedModel train(const Dataset& train_set, const ScalerParams& scaler, const NetworkSpec& spec,
                   const TrainConfig& cfg);

double predict(const TrainedModel& model, const TrafficWindow& window);
// 1 iff predict(...) >= model.threshold.
int classify(const TrainedModel& model, const TrafficWindow& window);

std::vector<double> predict_dataset(const TrainedModel& model, const Dataset& ds, bool parallel);

}  // namespace accdet
