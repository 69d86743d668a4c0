#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "accdet/numerics.hpp"

// Labeled detector windows, CSV ingestion, 20 s -> 1 min aggregation, min-max
// scaling, the random train/test split and a shockwave-style synthetic
// dataset generator.

namespace accdet {

inline constexpr std::size_t kWindowSteps = 11;  // minutes -5 .. +5 around the case time
inline constexpr std::size_t kTrafficFeatures = 6;
inline constexpr std::size_t kContextFeatures = 4;
inline constexpr std::size_t kFlatFeatures =
    kWindowSteps * kTrafficFeatures + kContextFeatures;  // 70
inline constexpr std::size_t kStepFeatures = kTrafficFeatures + kContextFeatures;  // 10

// One case: six 11-minute traffic series from the upstream/downstream
// detectors plus static context. Context flags are 0/1 in recorded data;
// oversampling interpolates them, so fractional values in [0,1] are legal
// (constraints: am_peak + pm_peak <= weekday <= 1).
struct TrafficWindow {
    std::array<double, kWindowSteps> speed_up{};    // mi/hr
    std::array<double, kWindowSteps> speed_down{};  // mi/hr
    std::array<double, kWindowSteps> occ_up{};      // percent, [0, 100]
    std::array<double, kWindowSteps> occ_down{};    // percent
    std::array<double, kWindowSteps> vol_up{};      // veh/min
    std::array<double, kWindowSteps> vol_down{};    // veh/min
    double weather = 1.0;                           // ordinal, [1, 4]
    double weekday = 0.0;
    double am_peak = 0.0;
    double pm_peak = 0.0;
    int label = 0;  // 1 = accident
};

using Dataset = std::vector<TrafficWindow>;

// Throws std::invalid_argument naming the offending field.
void validate_window(const TrafficWindow& w);

// Canonical flat feature order = CSV column order: the six traffic series
// (11 values each), then weather, weekday, am_peak, pm_peak.
std::array<double, kFlatFeatures> flatten_features(const TrafficWindow& w);
TrafficWindow window_from_features(const double* features, int label);

struct ScalerParams {
    std::array<double, kFlatFeatures> min{};
    std::array<double, kFlatFeatures> max{};

    bool is_constant(std::size_t i) const { return max[i] == min[i]; }
};

// Coordinate-wise min/max over the training set only.
ScalerParams fit_scaler(const Dataset& train);

// (x - min) / (max - min); constant coordinates map to 0. Values outside the
// fitted range are passed through unclipped.
double scale_coord(const ScalerParams& s, std::size_t i, double x);
std::array<double, kFlatFeatures> scale_features(const ScalerParams& s,
                                                 const std::array<double, kFlatFeatures>& f);

// The network input: 11 vectors of length 10, each timestep's six scaled
// traffic values with the four scaled context values appended.
std::vector<Vector> apply_scaler(const ScalerParams& s, const TrafficWindow& w);

struct RawDetectorReading {
    double timestamp_s = 0.0;  // on a 20-second grid
    double speed = 0.0;
    double occupancy = 0.0;
    double volume_20s = 0.0;  // vehicle count in the 20 s interval
};

struct MinuteRecord {
    double speed = 0.0;      // mean of the 3 readings
    double occupancy = 0.0;  // mean
    double volume = 0.0;     // sum of the 3 counts, veh/min
};

// Readings must cover whole minutes: consecutive 20 s timestamps, 3 per
// minute. Throws naming the timestamp at any gap.
std::vector<MinuteRecord> aggregate_to_minutes(const std::vector<RawDetectorReading>& readings);

std::vector<RawDetectorReading> load_raw_csv(const std::string& path);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Uniform random partition; train gets floor(fraction * n) rows.
SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed);
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);

struct GeneratorConfig {
    std::size_t n_accident = 241;
    std::size_t n_nonaccident = 6038;
    double base_speed = 50.6;  // mi/hr
    double base_occ = 15.1;    // percent
    double base_vol = 18.6;    // veh/min
    // Post-case upstream/downstream speed gap growth, mi/hr per minute. The
    // gap is split half below / half above the window's baseline; occupancy
    // and volume divergences are scaled from it by their base magnitudes.
    double divergence = 4.0;
    double noise = 1.0;  // scales every stochastic spread
    std::uint64_t seed = 1;
};

// Non-accident windows hold a shared per-window baseline at both detectors
// for all 11 minutes. Accident windows follow the same regime through the
// case minute, then the upstream speed falls and occupancy rises while the
// downstream speed rises and volume falls, the gaps growing linearly per
// minute. Context flags are sampled label-independently.
Dataset generate_synthetic(const GeneratorConfig& cfg);

// Dataset CSV: fixed header (speed_up_0..speed_up_10, speed_down_*, occ_up_*,
// occ_down_*, vol_up_*, vol_down_*, weather, weekday, am_peak, pm_peak,
// label), UTF-8, comma separators, shortest round-trip decimals.
Dataset load_csv(const std::string& path, bool require_label = true);
void save_csv(const Dataset& ds, const std::string& path);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
// Strict full-token parse; throws std::invalid_argument on garbage.
double parse_double(const std::string& token, const std::string& context);

// Write-to-temp-then-rename; target is either fully written or untouched.
void atomic_write(const std::string& path, const std::string& contents);

}  // namespace accdet
