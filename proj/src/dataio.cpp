#include "accdet/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "accdet/rng.hpp"

namespace accdet {

namespace {

constexpr double kFlagTol = 1e-9;

const char* kSeriesNames[kTrafficFeatures] = {"speed_up", "speed_down", "occ_up",
                                              "occ_down", "vol_up",     "vol_down"};
const char* kContextNames[kContextFeatures] = {"weather", "weekday", "am_peak", "pm_peak"};

std::vector<std::string> dataset_header(bool with_label) {
    std::vector<std::string> cols;
    for (const char* s : kSeriesNames)
        for (std::size_t t = 0; t < kWindowSteps; ++t)
            cols.push_back(std::string(s) + "_" + std::to_string(t));
    for (const char* s : kContextNames) cols.emplace_back(s);
    if (with_label) cols.emplace_back("label");
    return cols;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    for (std::string& s : out) {
        std::size_t a = s.find_first_not_of(" \t");
        std::size_t b = s.find_last_not_of(" \t");
        s = a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    }
    return out;
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += v[i];
    }
    return out;
}

void check_range(const char* field, double v, double lo, double hi) {
    if (!std::isfinite(v))
        throw std::invalid_argument(std::string(field) + " is not finite");
    if (v < lo || v > hi)
        throw std::invalid_argument(std::string(field) + " = " + format_double(v) +
                                    " outside [" + format_double(lo) + ", " + format_double(hi) +
                                    "]");
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, const std::string& context) {
    double v = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end || token.empty())
        throw std::invalid_argument(context + ": cannot parse number from '" + token + "'");
    return v;
}

void atomic_write(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw std::runtime_error("write to '" + tmp + "' failed");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "'");
}

void validate_window(const TrafficWindow& w) {
    for (std::size_t t = 0; t < kWindowSteps; ++t) {
        check_range("speed_up", w.speed_up[t], 0.0, 1e6);
        check_range("speed_down", w.speed_down[t], 0.0, 1e6);
        check_range("occ_up", w.occ_up[t], 0.0, 100.0);
        check_range("occ_down", w.occ_down[t], 0.0, 100.0);
        check_range("vol_up", w.vol_up[t], 0.0, 1e6);
        check_range("vol_down", w.vol_down[t], 0.0, 1e6);
    }
    check_range("weather", w.weather, 1.0, 4.0);
    check_range("weekday", w.weekday, 0.0, 1.0);
    check_range("am_peak", w.am_peak, 0.0, 1.0);
    check_range("pm_peak", w.pm_peak, 0.0, 1.0);
    // Peak flags require a weekday; exclusive for recorded data, and the
    // convex form below stays valid for interpolated values.
    if (w.am_peak + w.pm_peak > w.weekday + kFlagTol)
        throw std::invalid_argument("am_peak + pm_peak exceeds weekday flag (" +
                                    format_double(w.am_peak) + " + " + format_double(w.pm_peak) +
                                    " > " + format_double(w.weekday) + ")");
    if (w.label != 0 && w.label != 1)
        throw std::invalid_argument("label must be 0 or 1, got " + std::to_string(w.label));
}

std::array<double, kFlatFeatures> flatten_features(const TrafficWindow& w) {
    std::array<double, kFlatFeatures> f{};
    std::size_t i = 0;
    const std::array<double, kWindowSteps>* series[kTrafficFeatures] = {
        &w.speed_up, &w.speed_down, &w.occ_up, &w.occ_down, &w.vol_up, &w.vol_down};
    for (const auto* s : series)
        for (std::size_t t = 0; t < kWindowSteps; ++t) f[i++] = (*s)[t];
    f[i++] = w.weather;
    f[i++] = w.weekday;
    f[i++] = w.am_peak;
    f[i++] = w.pm_peak;
    return f;
}

TrafficWindow window_from_features(const double* features, int label) {
    TrafficWindow w;
    std::size_t i = 0;
    std::array<double, kWindowSteps>* series[kTrafficFeatures] = {
        &w.speed_up, &w.speed_down, &w.occ_up, &w.occ_down, &w.vol_up, &w.vol_down};
    for (auto* s : series)
        for (std::size_t t = 0; t < kWindowSteps; ++t) (*s)[t] = features[i++];
    w.weather = features[i++];
    w.weekday = features[i++];
    w.am_peak = features[i++];
    w.pm_peak = features[i++];
    w.label = label;
    return w;
}

ScalerParams fit_scaler(const Dataset& train) {
    if (train.empty()) throw std::invalid_argument("fit_scaler: empty training set");
    ScalerParams s;
    auto first = flatten_features(train.front());
    s.min = first;
    s.max = first;
    for (std::size_t r = 1; r < train.size(); ++r) {
        auto f = flatten_features(train[r]);
        for (std::size_t i = 0; i < kFlatFeatures; ++i) {
            s.min[i] = std::min(s.min[i], f[i]);
            s.max[i] = std::max(s.max[i], f[i]);
        }
    }
    return s;
}

double scale_coord(const ScalerParams& s, std::size_t i, double x) {
    if (s.is_constant(i)) return 0.0;
    return (x - s.min[i]) / (s.max[i] - s.min[i]);
}

std::array<double, kFlatFeatures> scale_features(const ScalerParams& s,
                                                 const std::array<double, kFlatFeatures>& f) {
    std::array<double, kFlatFeatures> out{};
    for (std::size_t i = 0; i < kFlatFeatures; ++i) out[i] = scale_coord(s, i, f[i]);
    return out;
}

std::vector<Vector> apply_scaler(const ScalerParams& s, const TrafficWindow& w) {
    auto scaled = scale_features(s, flatten_features(w));
    std::vector<Vector> seq(kWindowSteps, Vector(kStepFeatures, 0.0));
    for (std::size_t t = 0; t < kWindowSteps; ++t) {
        for (std::size_t f = 0; f < kTrafficFeatures; ++f)
            seq[t][f] = scaled[f * kWindowSteps + t];
        for (std::size_t c = 0; c < kContextFeatures; ++c)
            seq[t][kTrafficFeatures + c] = scaled[kTrafficFeatures * kWindowSteps + c];
    }
    return seq;
}

std::vector<MinuteRecord> aggregate_to_minutes(const std::vector<RawDetectorReading>& readings) {
    if (readings.empty()) throw std::invalid_argument("aggregate_to_minutes: no readings");
    for (std::size_t i = 0; i < readings.size(); ++i) {
        const RawDetectorReading& r = readings[i];
        if (std::fmod(r.timestamp_s, 20.0) != 0.0)
            throw std::invalid_argument("reading " + std::to_string(i) + ": timestamp " +
                                        format_double(r.timestamp_s) +
                                        " is not on the 20-second grid");
        if (r.speed < 0 || r.occupancy < 0 || r.volume_20s < 0)
            throw std::invalid_argument("reading " + std::to_string(i) + ": negative value");
        if (i > 0 && readings[i].timestamp_s != readings[i - 1].timestamp_s + 20.0)
            throw std::invalid_argument(
                "gap between timestamps " + format_double(readings[i - 1].timestamp_s) + " and " +
                format_double(readings[i].timestamp_s) + " (expected 20 s spacing)");
    }
    if (readings.size() % 3 != 0)
        throw std::invalid_argument("incomplete minute: " + std::to_string(readings.size() % 3) +
                                    " stray reading(s) starting at timestamp " +
                                    format_double(readings[readings.size() - readings.size() % 3]
                                                      .timestamp_s));
    std::vector<MinuteRecord> out;
    out.reserve(readings.size() / 3);
    for (std::size_t i = 0; i < readings.size(); i += 3) {
        MinuteRecord m;
        m.speed = (readings[i].speed + readings[i + 1].speed + readings[i + 2].speed) / 3.0;
        m.occupancy =
            (readings[i].occupancy + readings[i + 1].occupancy + readings[i + 2].occupancy) / 3.0;
        m.volume = readings[i].volume_20s + readings[i + 1].volume_20s + readings[i + 2].volume_20s;
        out.push_back(m);
    }
    return out;
}

std::vector<RawDetectorReading> load_raw_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    const std::vector<std::string> expected = {"timestamp_s", "speed", "occupancy", "volume_20s"};
    auto header = split_line(line);
    if (header != expected)
        throw std::runtime_error(path + ": header mismatch; expected '" + join(expected) +
                                 "', found '" + join(header) + "'");
    std::vector<RawDetectorReading> out;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != expected.size())
            throw std::runtime_error(path + ": row " + std::to_string(row) + ": expected " +
                                     std::to_string(expected.size()) + " columns, found " +
                                     std::to_string(cells.size()));
        RawDetectorReading r;
        std::string ctx = path + ": row " + std::to_string(row);
        r.timestamp_s = parse_double(cells[0], ctx + ": column 'timestamp_s'");
        r.speed = parse_double(cells[1], ctx + ": column 'speed'");
        r.occupancy = parse_double(cells[2], ctx + ": column 'occupancy'");
        r.volume_20s = parse_double(cells[3], ctx + ": column 'volume_20s'");
        out.push_back(r);
    }
    return out;
}

SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("split: train fraction " + format_double(train_fraction) +
                                    " outside (0,1)");
    if (n == 0) throw std::invalid_argument("split: empty dataset");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(seed);
    rng.shuffle(perm);
    std::size_t train_n =
        static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
    if (train_n == 0) train_n = 1;
    if (train_n >= n) train_n = n - 1;
    SplitIndices out;
    out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(train_n));
    out.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(train_n), perm.end());
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    SplitIndices idx = split_indices(ds.size(), train_fraction, seed);
    Dataset train, test;
    train.reserve(idx.train.size());
    test.reserve(idx.test.size());
    for (std::size_t i : idx.train) train.push_back(ds[i]);
    for (std::size_t i : idx.test) test.push_back(ds[i]);
    return {std::move(train), std::move(test)};
}

Dataset generate_synthetic(const GeneratorConfig& cfg) {
    if (cfg.n_accident == 0 || cfg.n_nonaccident == 0)
        throw std::invalid_argument("generator: both classes need at least one window");
    if (cfg.noise < 0) throw std::invalid_argument("generator: noise must be >= 0");
    if (cfg.divergence < 0) throw std::invalid_argument("generator: divergence must be >= 0");
    if (cfg.base_speed <= 0 || cfg.base_occ <= 0 || cfg.base_vol <= 0)
        throw std::invalid_argument("generator: base means must be positive");

    Rng rng(cfg.seed);
    const double occ_rate = cfg.base_occ / cfg.base_speed;
    const double vol_rate = cfg.base_vol / cfg.base_speed;

    auto gen_window = [&](int label) {
        TrafficWindow w;
        w.label = label;
        // Shared per-window operating point for both detectors.
        double s0 = std::max(5.0, cfg.base_speed + cfg.noise * 5.0 * rng.normal());
        double o0 = std::min(95.0, std::max(0.5, cfg.base_occ + cfg.noise * 3.0 * rng.normal()));
        double v0 = std::max(0.5, cfg.base_vol + cfg.noise * 3.0 * rng.normal());
        for (std::size_t t = 0; t < kWindowSteps; ++t) {
            double su = s0 + cfg.noise * 1.5 * rng.normal();
            double sd = s0 + cfg.noise * 1.5 * rng.normal();
            double ou = o0 + cfg.noise * 1.0 * rng.normal();
            double od = o0 + cfg.noise * 1.0 * rng.normal();
            double vu = v0 + cfg.noise * 1.2 * rng.normal();
            double vd = v0 + cfg.noise * 1.2 * rng.normal();
            if (label == 1 && t > 5) {
                // Shockwave: the up/down gap grows linearly after the case minute.
                double delta = cfg.divergence * static_cast<double>(t - 5);
                su -= delta / 2.0;
                sd += delta / 2.0;
                ou += delta * occ_rate;
                vd -= delta * vol_rate;
            }
            w.speed_up[t] = std::max(0.0, su);
            w.speed_down[t] = std::max(0.0, sd);
            w.occ_up[t] = std::min(100.0, std::max(0.0, ou));
            w.occ_down[t] = std::min(100.0, std::max(0.0, od));
            w.vol_up[t] = std::max(0.0, vu);
            w.vol_down[t] = std::max(0.0, vd);
        }
        // Peak / weekday flags with unconditional means 0.12 / 0.13 / 0.71.
        double u = rng.uniform01();
        if (u < 0.12) {
            w.weekday = 1.0;
            w.am_peak = 1.0;
        } else if (u < 0.25) {
            w.weekday = 1.0;
            w.pm_peak = 1.0;
        } else {
            w.weekday = rng.uniform01() < (0.71 - 0.25) / 0.75 ? 1.0 : 0.0;
        }
        // Ordinal weather with mean 1.18.
        double v = rng.uniform01();
        w.weather = v < 0.87 ? 1.0 : v < 0.96 ? 2.0 : v < 0.99 ? 3.0 : 4.0;
        return w;
    };

    Dataset ds;
    ds.reserve(cfg.n_accident + cfg.n_nonaccident);
    for (std::size_t i = 0; i < cfg.n_accident; ++i) ds.push_back(gen_window(1));
    for (std::size_t i = 0; i < cfg.n_nonaccident; ++i) ds.push_back(gen_window(0));
    return ds;
}

Dataset load_csv(const std::string& path, bool require_label) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");

    auto header = split_line(line);
    auto with_label = dataset_header(true);
    auto without_label = dataset_header(false);
    bool has_label;
    if (header == with_label) {
        has_label = true;
    } else if (!require_label && header == without_label) {
        has_label = false;
    } else {
        throw std::runtime_error(path + ": header mismatch; expected '" + join(with_label) +
                                 "', found '" + join(header) + "'");
    }
    const std::vector<std::string>& names = has_label ? with_label : without_label;

    Dataset ds;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != names.size())
            throw std::runtime_error(path + ": row " + std::to_string(row) + ": expected " +
                                     std::to_string(names.size()) + " columns, found " +
                                     std::to_string(cells.size()));
        std::array<double, kFlatFeatures> f{};
        for (std::size_t i = 0; i < kFlatFeatures; ++i)
            f[i] = parse_double(cells[i], path + ": row " + std::to_string(row) + ": column '" +
                                              names[i] + "'");
        int label = 0;
        if (has_label) {
            double lv = parse_double(cells[kFlatFeatures],
                                     path + ": row " + std::to_string(row) + ": column 'label'");
            if (lv != 0.0 && lv != 1.0)
                throw std::runtime_error(path + ": row " + std::to_string(row) +
                                         ": label must be 0 or 1, got " + cells[kFlatFeatures]);
            label = static_cast<int>(lv);
        }
        TrafficWindow w = window_from_features(f.data(), label);
        try {
            validate_window(w);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ": row " + std::to_string(row) + ": " + e.what());
        }
        ds.push_back(w);
    }
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::string out = join(dataset_header(true)) + "\n";
    for (const TrafficWindow& w : ds) {
        auto f = flatten_features(w);
        for (std::size_t i = 0; i < kFlatFeatures; ++i) {
            out += format_double(f[i]);
            out += ",";
        }
        out += std::to_string(w.label);
        out += "\n";
    }
    atomic_write(path, out);
}

}  // namespace accdet
