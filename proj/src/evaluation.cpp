#include "accdet/evaluation.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "accdet/dataio.hpp"

namespace accdet {

ConfusionMatrix confusion(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("confusion: " + std::to_string(predictions.size()) +
                                    " predictions vs " + std::to_string(labels.size()) +
                                    " labels");
    if (predictions.empty()) throw std::invalid_argument("confusion: empty inputs");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        int p = predictions[i], y = labels[i];
        if ((p != 0 && p != 1) || (y != 0 && y != 1))
            throw std::invalid_argument("confusion: entry " + std::to_string(i) +
                                        " is not binary");
        if (p == 1 && y == 1)
            ++cm.tp;
        else if (p == 1 && y == 0)
            ++cm.fp;
        else if (p == 0 && y == 1)
            ++cm.fn;
        else
            ++cm.tn;
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw std::invalid_argument("accuracy: empty confusion matrix");
    return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total()) * 100.0;
}

double detection_rate(const ConfusionMatrix& cm) {
    if (cm.tp + cm.fn == 0)
        throw std::invalid_argument("detection_rate: no accident cases in the data");
    return static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn) * 100.0;
}

double false_alarm_rate(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw std::invalid_argument("false_alarm_rate: empty confusion matrix");
    return static_cast<double>(cm.fp) / static_cast<double>(cm.total()) * 100.0;
}

std::vector<RocPoint> roc_curve(const std::vector<double>& scores,
                                const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("roc_curve: " + std::to_string(scores.size()) +
                                    " scores vs " + std::to_string(labels.size()) + " labels");
    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("roc_curve: labels must be 0 or 1");
        (y == 1 ? n_pos : n_neg) += 1;
    }
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("roc_curve: both classes must be present (" +
                                    std::to_string(n_pos) + " positive, " +
                                    std::to_string(n_neg) + " negative)");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<RocPoint> roc;
    roc.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        // Consume every sample tied at this score: they flip together.
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        roc.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                       static_cast<double>(tp) / static_cast<double>(n_pos), s});
    }
    return roc;
}

double auc(const std::vector<RocPoint>& roc) {
    if (roc.size() < 2) throw std::invalid_argument("auc: need at least 2 ROC points");
    double area = 0.0;
    for (std::size_t i = 1; i < roc.size(); ++i) {
        double dx = roc[i].false_positive_rate - roc[i - 1].false_positive_rate;
        area += dx * (roc[i].true_positive_rate + roc[i - 1].true_positive_rate) / 2.0;
    }
    return area;
}

SweepResult threshold_sweep(const std::vector<double>& scores, const std::vector<int>& labels,
                            const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("threshold_sweep: empty threshold grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] <= 0.0 || grid[i] >= 1.0)
            throw std::invalid_argument("threshold_sweep: grid value " +
                                        format_double(grid[i]) + " outside (0,1)");
        if (i > 0 && grid[i] <= grid[i - 1])
            throw std::invalid_argument("threshold_sweep: grid must be strictly increasing");
    }
    if (scores.size() != labels.size() || scores.empty())
        throw std::invalid_argument("threshold_sweep: scores/labels size mismatch or empty");

    SweepResult result;
    result.table.reserve(grid.size());
    double best_objective = -std::numeric_limits<double>::infinity();
    std::vector<int> preds(scores.size());
    for (double t : grid) {
        for (std::size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] >= t ? 1 : 0;
        ThresholdMetrics m;
        m.threshold = t;
        m.confusion = confusion(preds, labels);
        try {
            m.accuracy = accuracy(m.confusion);
            m.detection_rate = detection_rate(m.confusion);
            m.false_alarm_rate = false_alarm_rate(m.confusion);
        } catch (const std::exception& e) {
            throw std::invalid_argument("threshold_sweep: at threshold " + format_double(t) +
                                        ": " + e.what());
        }
        double objective = m.detection_rate - m.false_alarm_rate;
        if (objective > best_objective) {
            best_objective = objective;
            result.best_threshold = t;
        }
        result.table.push_back(m);
    }
    return result;
}

EvalReport evaluate_scores(const std::vector<double>& scores, const std::vector<int>& labels,
                           double threshold) {
    EvalReport rep;
    rep.threshold = threshold;
    std::vector<int> preds(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] >= threshold ? 1 : 0;
    rep.confusion = confusion(preds, labels);
    rep.accuracy = accuracy(rep.confusion);
    rep.detection_rate = detection_rate(rep.confusion);
    rep.false_alarm_rate = false_alarm_rate(rep.confusion);
    rep.roc = roc_curve(scores, labels);
    rep.auc = auc(rep.roc);
    return rep;
}

void write_metrics_csv(const EvalReport& report, const std::string& path) {
    std::string out = "metric,value\n";
    out += "threshold," + format_double(report.threshold) + "\n";
    out += "tp," + std::to_string(report.confusion.tp) + "\n";
    out += "fp," + std::to_string(report.confusion.fp) + "\n";
    out += "fn," + std::to_string(report.confusion.fn) + "\n";
    out += "tn," + std::to_string(report.confusion.tn) + "\n";
    out += "accuracy_pct," + format_double(report.accuracy) + "\n";
    out += "detection_rate_pct," + format_double(report.detection_rate) + "\n";
    out += "false_alarm_rate_pct," + format_double(report.false_alarm_rate) + "\n";
    out += "auc," + format_double(report.auc) + "\n";
    atomic_write(path, out);
}

void write_roc_csv(const std::vector<RocPoint>& roc, const std::string& path) {
    std::string out = "threshold,fpr,tpr\n";
    for (const RocPoint& p : roc) {
        out += format_double(p.threshold) + "," + format_double(p.false_positive_rate) + "," +
               format_double(p.true_positive_rate) + "\n";
    }
    atomic_write(path, out);
}

std::vector<double> default_threshold_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 99; ++i) grid.push_back(static_cast<double>(i) / 100.0);
    return grid;
}

}  // namespace accdet
